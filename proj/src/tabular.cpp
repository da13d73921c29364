#include "advforge/tabular.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "advforge/error.hpp"
#include "advforge/rng.hpp"
#include "json_io.hpp"

namespace advforge {

namespace {

using nlohmann::ordered_json;

// RFC-4180-style reader: quoted fields may contain commas, doubled quotes and
// line breaks; records end at a bare newline (\n or \r\n).
std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool quoted = false;
  bool any = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
      continue;
    }
    switch (c) {
      case '"':
        quoted = true;
        any = true;
        break;
      case ',':
        record.push_back(std::move(field));
        field.clear();
        any = true;
        break;
      case '\r':
        break;
      case '\n':
        if (any || !field.empty()) {
          record.push_back(std::move(field));
          records.push_back(std::move(record));
        }
        field.clear();
        record.clear();
        any = false;
        break;
      default:
        field += c;
        any = true;
    }
  }
  require(!quoted, "csv: unterminated quoted field");
  if (any || !field.empty()) {
    record.push_back(std::move(field));
    records.push_back(std::move(record));
  }
  return records;
}

double parse_real(const std::string& cell, std::size_t row, const std::string& col) {
  double v = 0.0;
  const char* begin = cell.data();
  const char* end = begin + cell.size();
  auto [ptr, ec] = std::from_chars(begin, end, v);
  require(ec == std::errc{} && ptr == end && std::isfinite(v),
          "csv: cannot parse \"" + cell + "\" as a number at row " + std::to_string(row) +
              ", column " + col);
  return v;
}

std::string format_real(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  require(ec == std::errc{}, "number formatting failed");
  return std::string(buf, ptr);
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Schema

std::size_t Schema::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (columns[i].name == name) return i;
  throw ValidationError("schema has no column named " + name);
}

void Schema::validate() const {
  require(!columns.empty(), "schema: no columns");
  std::set<std::string> seen;
  for (const auto& c : columns) {
    require(!c.name.empty(), "schema: empty column name");
    require(seen.insert(c.name).second, "schema: duplicate column name " + c.name);
  }
  require(!label.empty(), "schema: no label column designated");
  const std::size_t li = index_of(label);
  require(columns[li].kind == ColumnKind::categorical,
          "schema: label column " + label + " must be categorical");
}

ordered_json read_json_file(const std::string& path, const char* what) {
  std::ifstream is(path);
  if (!is) throw RuntimeError(std::string("cannot open ") + what + " file: " + path);
  ordered_json j;
  try {
    is >> j;
  } catch (const std::exception& e) {
    throw ValidationError(std::string(what) + " file " + path + " is not valid JSON: " + e.what());
  }
  return j;
}

Schema schema_from_json(const ordered_json& j) {
  require(j.is_object() && j.contains("label") && j.contains("columns"),
          "schema must be an object with \"label\" and \"columns\"");
  Schema s;
  s.label = j.at("label").get<std::string>();
  for (const auto& c : j.at("columns")) {
    require(c.contains("name") && c.contains("kind"), "schema column needs \"name\" and \"kind\"");
    const std::string kind = c.at("kind").get<std::string>();
    require(kind == "continuous" || kind == "categorical",
            "schema column kind must be continuous or categorical, got " + kind);
    s.columns.push_back({c.at("name").get<std::string>(),
                         kind == "continuous" ? ColumnKind::continuous : ColumnKind::categorical});
  }
  return s;
}

ordered_json schema_to_json(const Schema& s) {
  ordered_json j;
  j["label"] = s.label;
  j["columns"] = ordered_json::array();
  for (const auto& c : s.columns)
    j["columns"].push_back({{"name", c.name},
                            {"kind", c.kind == ColumnKind::continuous ? "continuous" : "categorical"}});
  return j;
}

Schema Schema::from_json_file(const std::string& path) {
  Schema s = schema_from_json(read_json_file(path, "schema"));
  s.validate();
  return s;
}

void Schema::to_json_file(const std::string& path) const {
  std::ofstream os(path);
  if (!os) throw RuntimeError("cannot write schema file: " + path);
  os << schema_to_json(*this).dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// EncoderMap

std::size_t EncoderMap::encode(std::size_t col, const std::string& v) const {
  auto it = values.find(col);
  require(it != values.end(), "no encoder for column index " + std::to_string(col));
  auto pos = std::lower_bound(it->second.begin(), it->second.end(), v);
  require(pos != it->second.end() && *pos == v,
          "value \"" + v + "\" was not seen when the encoder was fitted");
  return static_cast<std::size_t>(pos - it->second.begin());
}

const std::string& EncoderMap::decode(std::size_t col, std::size_t code) const {
  auto it = values.find(col);
  require(it != values.end(), "no encoder for column index " + std::to_string(col));
  require(code < it->second.size(), "code " + std::to_string(code) + " out of range for column " +
                                        std::to_string(col));
  return it->second[code];
}

std::size_t EncoderMap::cardinality(std::size_t col) const {
  auto it = values.find(col);
  require(it != values.end(), "no encoder for column index " + std::to_string(col));
  return it->second.size();
}

// ---------------------------------------------------------------------------
// Table

std::vector<int> Table::labels() const {
  require(encoded(), "table still holds raw categorical strings; encode it first");
  const std::size_t li = schema.label_index();
  std::vector<int> out(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    double v = rows[r][li];
    require(v == 0.0 || v == 1.0, "label must be binary 0/1, found " + format_real(v) +
                                      " at row " + std::to_string(r + 1));
    out[r] = static_cast<int>(v);
  }
  return out;
}

std::pair<std::size_t, std::size_t> Table::class_counts() const {
  std::size_t zeros = 0, ones = 0;
  for (int y : labels()) (y == 0 ? zeros : ones)++;
  return {zeros, ones};
}

std::vector<std::size_t> Table::feature_indices() const {
  const std::size_t li = schema.label_index();
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < schema.width(); ++i)
    if (i != li) idx.push_back(i);
  return idx;
}

ordered_json encoder_to_json(const std::optional<EncoderMap>& encoder) {
  if (!encoder) return nullptr;
  ordered_json j = ordered_json::object();
  for (const auto& [col, vals] : encoder->values) j[std::to_string(col)] = vals;
  return j;
}

std::optional<EncoderMap> encoder_from_json(const ordered_json& j) {
  if (j.is_null()) return std::nullopt;
  require(j.is_object(), "encoder must be an object keyed by column index");
  EncoderMap enc;
  for (const auto& [key, vals] : j.items()) {
    std::size_t col = 0;
    auto [p, ec] = std::from_chars(key.data(), key.data() + key.size(), col);
    require(ec == std::errc{} && p == key.data() + key.size(),
            "encoder key is not a column index: " + key);
    enc.values[col] = vals.get<std::vector<std::string>>();
  }
  return enc;
}

void Table::to_json_file(const std::string& path) const {
  require(encoded(), "table persistence needs an encoded table");
  ordered_json j;
  j["schema"] = schema_to_json(schema);
  j["encoder"] = encoder_to_json(encoder);
  j["rows"] = rows;
  std::ofstream os(path);
  if (!os) throw RuntimeError("cannot write table file: " + path);
  os << j.dump() << '\n';
}

Table Table::from_json_file(const std::string& path) {
  const ordered_json j = read_json_file(path, "table");
  require(j.contains("schema") && j.contains("encoder") && j.contains("rows"),
          "table file missing schema/encoder/rows: " + path);
  Table t;
  t.schema = schema_from_json(j.at("schema"));
  t.encoder = encoder_from_json(j.at("encoder"));
  t.rows = j.at("rows").get<std::vector<std::vector<double>>>();
  for (const auto& r : t.rows)
    require(r.size() == t.schema.width(), "table row width does not match its schema: " + path);
  return t;
}

// ---------------------------------------------------------------------------
// load / store

Table load_csv(const std::string& path, const Schema& schema) {
  schema.validate();
  std::ifstream is(path, std::ios::binary);
  if (!is) throw RuntimeError("cannot open csv file: " + path);
  std::ostringstream buf;
  buf << is.rdbuf();
  auto records = parse_csv(buf.str());
  require(!records.empty(), "csv file is empty: " + path);

  const auto& header = records[0];
  // order-insensitive match: locate each schema column in the header
  std::vector<std::size_t> col_pos(schema.width());
  for (std::size_t i = 0; i < schema.width(); ++i) {
    auto it = std::find(header.begin(), header.end(), schema.columns[i].name);
    require(it != header.end(), "csv is missing column " + schema.columns[i].name);
    col_pos[i] = static_cast<std::size_t>(it - header.begin());
  }

  require(records.size() > 1, "csv has a header but no data rows: " + path);
  Table t;
  t.schema = schema;
  t.rows.reserve(records.size() - 1);
  t.raw_cats.reserve(records.size() - 1);
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    require(rec.size() == header.size(),
            "csv row " + std::to_string(r) + " has " + std::to_string(rec.size()) +
                " fields, header has " + std::to_string(header.size()));
    std::vector<double> row(schema.width(), -1.0);
    std::vector<std::string> raw;
    for (std::size_t i = 0; i < schema.width(); ++i) {
      const std::string& cell = rec[col_pos[i]];
      require(!cell.empty(), "csv: missing value at row " + std::to_string(r) + ", column " +
                                 schema.columns[i].name);
      if (schema.columns[i].kind == ColumnKind::continuous)
        row[i] = parse_real(cell, r, schema.columns[i].name);
      else
        raw.push_back(cell);
    }
    t.rows.push_back(std::move(row));
    t.raw_cats.push_back(std::move(raw));
  }
  return t;
}

void write_csv(const Table& table, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw RuntimeError("cannot write csv file: " + path);
  const Schema& s = table.schema;
  for (std::size_t i = 0; i < s.width(); ++i) os << (i ? "," : "") << csv_escape(s.columns[i].name);
  os << '\n';
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < s.width(); ++i) {
      if (i) os << ',';
      if (s.columns[i].kind == ColumnKind::categorical && table.encoder &&
          table.encoder->values.count(i)) {
        os << csv_escape(table.encoder->decode(i, static_cast<std::size_t>(row[i])));
      } else if (s.columns[i].kind == ColumnKind::categorical) {
        os << static_cast<long long>(row[i]);
      } else {
        os << format_real(row[i]);
      }
    }
    os << '\n';
  }
  if (!os) throw RuntimeError("write failed: " + path);
}

// ---------------------------------------------------------------------------
// encode / balance / split

std::pair<Table, EncoderMap> label_encode(const Table& table) {
  require(!table.encoded(), "table is already encoded");
  EncoderMap enc;
  const Schema& s = table.schema;
  std::size_t cat_slot = 0;
  for (std::size_t i = 0; i < s.width(); ++i) {
    if (s.columns[i].kind != ColumnKind::categorical) continue;
    std::set<std::string> uniq;
    for (const auto& raw : table.raw_cats) uniq.insert(raw[cat_slot]);
    enc.values[i] = std::vector<std::string>(uniq.begin(), uniq.end());
    ++cat_slot;
  }
  const std::size_t li = s.label_index();
  require(enc.cardinality(li) == 2,
          "label column " + s.label + " must have exactly 2 observed values, found " +
              std::to_string(enc.cardinality(li)));

  Table out;
  out.schema = s;
  out.rows = table.rows;
  out.encoder = enc;
  for (std::size_t r = 0; r < out.rows.size(); ++r) {
    std::size_t cat = 0;
    for (std::size_t i = 0; i < s.width(); ++i) {
      if (s.columns[i].kind != ColumnKind::categorical) continue;
      out.rows[r][i] = static_cast<double>(enc.encode(i, table.raw_cats[r][cat]));
      ++cat;
    }
  }
  return {out, enc};
}

Table balance_classes(const Table& table, std::uint64_t seed, std::size_t cap) {
  auto y = table.labels();
  std::vector<std::size_t> zeros, ones;
  for (std::size_t i = 0; i < y.size(); ++i) (y[i] == 0 ? zeros : ones).push_back(i);
  require(!zeros.empty() && !ones.empty(), "balance_classes: one class is absent");

  const auto& minority = (ones.size() <= zeros.size()) ? ones : zeros;
  const auto& majority = (ones.size() <= zeros.size()) ? zeros : ones;
  std::size_t per_class = minority.size();
  if (cap > 0) per_class = std::min(per_class, cap);

  Rng rng(seed);
  std::vector<std::size_t> keep;
  if (per_class < minority.size()) {
    for (std::size_t k : rng.sample_without_replacement(minority.size(), per_class))
      keep.push_back(minority[k]);
  } else {
    keep = minority;
  }
  for (std::size_t k : rng.sample_without_replacement(majority.size(), per_class))
    keep.push_back(majority[k]);

  Table out;
  out.schema = table.schema;
  out.encoder = table.encoder;
  out.rows.reserve(keep.size());
  rng.shuffle(keep);
  for (std::size_t i : keep) out.rows.push_back(table.rows[i]);
  return out;
}

std::pair<Table, Table> train_test_split(const Table& table, double test_fraction,
                                         std::uint64_t seed) {
  require(test_fraction > 0.0 && test_fraction < 1.0,
          "test fraction must be in (0,1), got " + format_real(test_fraction));
  require(table.encoded(), "split expects an encoded table");
  const std::size_t n = table.row_count();
  const auto n_test = static_cast<std::size_t>(
      std::llround(test_fraction * static_cast<double>(n)));
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  Rng rng(seed);
  rng.shuffle(idx);

  Table train, test;
  train.schema = test.schema = table.schema;
  train.encoder = test.encoder = table.encoder;
  for (std::size_t i = 0; i < n; ++i)
    ((i < n - n_test) ? train : test).rows.push_back(table.rows[idx[i]]);
  return {train, test};
}

// ---------------------------------------------------------------------------
// synthetic generator

Table synth_fraud(std::size_t n, std::size_t n_continuous, std::size_t n_categorical,
                  double fraud_rate, std::uint64_t seed) {
  require(n > 0 && n_continuous > 0 && n_categorical > 0, "synth_fraud: sizes must be positive");
  require(fraud_rate > 0.0 && fraud_rate < 1.0,
          "synth_fraud: fraud_rate must be in (0,1), got " + format_real(fraud_rate));

  Table t;
  for (std::size_t i = 0; i < n_continuous; ++i) {
    char name[16];
    std::snprintf(name, sizeof name, "num_%02zu", i);
    t.schema.columns.push_back({name, ColumnKind::continuous});
  }
  for (std::size_t i = 0; i < n_categorical; ++i) {
    char name[16];
    std::snprintf(name, sizeof name, "cat_%zu", i);
    t.schema.columns.push_back({name, ColumnKind::categorical});
  }
  t.schema.columns.push_back({"fraud_bool", ColumnKind::categorical});
  t.schema.label = "fraud_bool";

  const auto n_fraud = static_cast<std::size_t>(
      std::llround(fraud_rate * static_cast<double>(n)));
  std::vector<int> y(n, 0);
  std::fill(y.begin(), y.begin() + n_fraud, 1);

  Rng rng(seed);
  rng.shuffle(y);

  // half the continuous features carry a class-mean offset; the first two of
  // those are strong "anchor" features a shallow tree can split on cleanly
  std::vector<double> offset(n_continuous, 0.0);
  {
    auto informative = rng.sample_without_replacement(n_continuous, (n_continuous + 1) / 2);
    for (std::size_t i = 0; i < informative.size(); ++i)
      offset[informative[i]] = i < 2 ? 4.0 : 1.2;
  }

  // class-skewed categoricals: one "hot" value per column that class 1 prefers
  const std::size_t cards[4] = {5, 4, 3, 6};
  constexpr double kHotFraud = 0.65, kHotClean = 0.05;
  // rows drawing features from the opposite class; keeps models honest and
  // guarantees some jointly-misclassified rows for the boundary stage
  constexpr double kHardRate = 0.09;

  t.rows.reserve(n);
  for (std::size_t r = 0; r < n; ++r) {
    const bool hard = rng.uniform01() < kHardRate;
    const int cls = hard ? 1 - y[r] : y[r];
    std::vector<double> row(t.schema.width());
    for (std::size_t f = 0; f < n_continuous; ++f)
      row[f] = rng.normal() + (cls == 1 ? offset[f] : 0.0);
    for (std::size_t c = 0; c < n_categorical; ++c) {
      const std::size_t card = cards[c % 4];
      const std::size_t hot = c % card;
      const double p_hot = (cls == 1) ? kHotFraud : kHotClean;
      std::size_t code;
      if (rng.uniform01() < p_hot) {
        code = hot;
      } else {
        code = rng.below(card - 1);
        if (code >= hot) ++code;
      }
      row[n_continuous + c] = static_cast<double>(code);
    }
    row.back() = static_cast<double>(y[r]);
    t.rows.push_back(std::move(row));
  }
  return t;
}

}  // namespace advforge
