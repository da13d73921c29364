#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace advforge {

enum class ColumnKind { continuous, categorical };

struct Column {
  std::string name;
  ColumnKind kind;
};

// Ordered column descriptors plus the designated binary label column.
struct Schema {
  std::vector<Column> columns;
  std::string label;

  std::size_t width() const { return columns.size(); }
  std::size_t index_of(const std::string& name) const;  // rejects unknown names
  std::size_t label_index() const { return index_of(label); }
  void validate() const;

  static Schema from_json_file(const std::string& path);
  void to_json_file(const std::string& path) const;
};

// Per categorical column: sorted unique raw values; code = position in list.
struct EncoderMap {
  std::map<std::size_t, std::vector<std::string>> values;  // keyed by column index

  std::size_t encode(std::size_t col, const std::string& v) const;
  const std::string& decode(std::size_t col, std::size_t code) const;
  std::size_t cardinality(std::size_t col) const;
};

// Encoded numeric rows. Between load_csv and label_encode, categorical cells
// live in raw_cats (one string per categorical column, row-parallel) and the
// corresponding numeric cells are placeholders.
struct Table {
  Schema schema;
  std::vector<std::vector<double>> rows;
  std::vector<std::vector<std::string>> raw_cats;
  std::optional<EncoderMap> encoder;

  std::size_t row_count() const { return rows.size(); }
  bool encoded() const { return raw_cats.empty(); }
  std::vector<int> labels() const;                      // encoded tables only
  std::pair<std::size_t, std::size_t> class_counts() const;  // (zeros, ones)
  std::vector<std::size_t> feature_indices() const;     // all columns except the label

  // Lossless persistence for encoded tables: schema + encoder + numeric rows.
  static Table from_json_file(const std::string& path);
  void to_json_file(const std::string& path) const;
};

Table load_csv(const std::string& path, const Schema& schema);
void write_csv(const Table& table, const std::string& path);

// Codes assigned by lexicographically sorted unique values per column.
std::pair<Table, EncoderMap> label_encode(const Table& table);

// Minority kept whole, equal-size seeded majority subsample, rows shuffled.
// cap > 0 additionally limits the per-class count (subsampling the minority too).
Table balance_classes(const Table& table, std::uint64_t seed, std::size_t cap = 0);

// Seeded shuffle then split; |test| = round(test_fraction * n); train comes first.
std::pair<Table, Table> train_test_split(const Table& table, double test_fraction,
                                         std::uint64_t seed);

// Seeded fraud-style generator: class-conditional Gaussian continuous features
// (unit variance, +1.0 mean offset for class 1 on a seeded feature subset),
// class-skewed categoricals, exact round(n * fraud_rate) positive labels. A
// fraction of rows keep their label but draw features from the other class, so
// learned boundaries stay imperfect the way real fraud data is.
Table synth_fraud(std::size_t n, std::size_t n_continuous = 28,
                  std::size_t n_categorical = 4, double fraud_rate = 0.011,
                  std::uint64_t seed = 0);

}  // namespace advforge
