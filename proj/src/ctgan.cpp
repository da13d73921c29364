#include "advforge/ctgan.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <numeric>

#include "advforge/error.hpp"
#include "advforge/metrics.hpp"
#include "advforge/rng.hpp"
#include "advforge/tensor.hpp"
#include "advforge/trees.hpp"
#include "json_io.hpp"

namespace advforge {

namespace {

// Start offset of each column's block in the transformed row; one trailing
// entry holds the total width.
std::vector<std::size_t> block_offsets(const std::vector<ColumnTransform>& ts) {
  std::vector<std::size_t> off(ts.size() + 1, 0);
  for (std::size_t i = 0; i < ts.size(); ++i)
    off[i + 1] = off[i] + (ts[i].kind == ColumnKind::continuous ? 1 : ts[i].cardinality);
  return off;
}

double scale_to_unit(const ColumnTransform& t, double v) {
  if (t.hi == t.lo) return 0.0;  // constant column collapses to the tanh center
  return 2.0 * (v - t.lo) / (t.hi - t.lo) - 1.0;
}

double scale_back(const ColumnTransform& t, double u) {
  return t.lo + (u + 1.0) * 0.5 * (t.hi - t.lo);
}

TensorPtr glorot(std::size_t in, std::size_t out, Rng& rng) {
  auto w = Tensor::make({in, out});
  const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
  for (auto& v : w->data) v = rng.uniform(-limit, limit);
  return w;
}

// zero_head starts the output layer at zero, so the generator opens exactly at
// the tanh center / uniform softmax instead of a random relu-stack offset.
void init_mlp(ParameterSet& ps, std::size_t in, const std::vector<std::size_t>& dims,
              std::size_t out, Rng& rng, bool zero_head) {
  std::size_t prev = in;
  for (std::size_t i = 0; i < dims.size(); ++i) {
    require(dims[i] >= 1, "gan: zero-width hidden layer");
    ps.add("w" + std::to_string(i), glorot(prev, dims[i], rng));
    ps.add("b" + std::to_string(i), Tensor::make({dims[i]}));
    prev = dims[i];
  }
  ps.add("head_w", zero_head ? Tensor::make({prev, out}) : glorot(prev, out, rng));
  ps.add("head_b", Tensor::make({out}));
}

TensorPtr mlp(Tape& tape, const TensorPtr& x, const ParameterSet& ps, std::size_t n_hidden) {
  TensorPtr h = x;
  for (std::size_t i = 0; i < n_hidden; ++i)
    h = tape.relu(tape.dense(h, ps.get("w" + std::to_string(i)),
                             ps.get("b" + std::to_string(i))));
  return tape.dense(h, ps.get("head_w"), ps.get("head_b"));
}

// Raw head output split per column: tanh for continuous, softmax for
// categorical blocks, concatenated back into one [B, row_width] tensor.
TensorPtr generator_forward(Tape& tape, const GanModel& m, const TensorPtr& input) {
  auto raw = mlp(tape, input, m.gen, m.gen_dims.size());
  const auto off = block_offsets(m.transforms);
  std::vector<TensorPtr> parts;
  parts.reserve(m.transforms.size());
  for (std::size_t c = 0; c < m.transforms.size(); ++c) {
    auto block = tape.slice_cols(raw, off[c], off[c + 1]);
    parts.push_back(m.transforms[c].kind == ColumnKind::continuous ? tape.tanh(block)
                                                                   : tape.softmax(block));
  }
  return parts.size() == 1 ? parts[0] : tape.concat_cols(parts);
}

TensorPtr discriminator_prob(Tape& tape, const GanModel& m, const TensorPtr& input) {
  return tape.sigmoid(mlp(tape, input, m.disc, m.disc_dims.size()));
}

// Precomputed training-by-sampling state.
struct CondState {
  std::vector<std::size_t> offsets;               // one-hot start per cond column
  std::vector<std::vector<double>> cumulative;    // running log1p(count) sums
  std::vector<std::vector<std::vector<std::size_t>>> rows_by_value;
};

// First value whose cumulative weight exceeds the draw; zero-weight values
// (identical adjacent cumulative sums) are never selected.
std::size_t weighted_pick(const std::vector<double>& cum, Rng& rng) {
  const double u = rng.uniform01() * cum.back();
  std::size_t idx = static_cast<std::size_t>(
      std::upper_bound(cum.begin(), cum.end(), u) - cum.begin());
  if (idx >= cum.size()) idx = cum.size() - 1;
  while (idx > 0 && cum[idx] == cum[idx - 1]) --idx;
  return idx;
}

struct CondBatch {
  std::vector<std::size_t> cat;    // index into cond_columns, ascending
  std::vector<std::size_t> value;  // chosen code per sample
};

// One (column, value) condition per sample, then the batch is ordered by
// column so the generator penalty can address each block with a row slice.
CondBatch draw_conditions(const GanModel& m, const CondState& cs, std::size_t batch, Rng& rng) {
  std::vector<std::pair<std::size_t, std::size_t>> draws(batch);
  for (auto& d : draws) {
    d.first = rng.below(m.cond_columns.size());
    d.second = weighted_pick(cs.cumulative[d.first], rng);
  }
  std::stable_sort(draws.begin(), draws.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  CondBatch cb;
  cb.cat.reserve(batch);
  cb.value.reserve(batch);
  for (const auto& d : draws) {
    cb.cat.push_back(d.first);
    cb.value.push_back(d.second);
  }
  return cb;
}

}  // namespace

std::size_t GanModel::row_width() const {
  return block_offsets(transforms).back();
}

std::size_t GanModel::cond_width() const {
  std::size_t w = 0;
  for (std::size_t c : cond_columns) w += transforms[c].cardinality;
  return w;
}

GanModel train_tabular_gan(const Table& data, const GanConfig& config) {
  require(data.row_count() > 0, "gan: training table is empty");
  require(data.encoded(), "gan: training table must be label-encoded first");
  require(config.epochs >= 1, "gan: epochs must be positive");
  require(config.noise_dim >= 1, "gan: noise dimension must be positive");
  require(config.batch >= 1, "gan: batch size must be positive");

  const std::size_t n = data.row_count();
  GanModel m;
  m.schema = data.schema;
  m.encoder = data.encoder;
  m.noise_dim = config.noise_dim;
  m.gen_dims = config.gen_dims;
  m.disc_dims = config.disc_dims;

  // fit the per-column transforms
  for (std::size_t c = 0; c < m.schema.width(); ++c) {
    ColumnTransform t;
    t.kind = m.schema.columns[c].kind;
    if (t.kind == ColumnKind::continuous) {
      t.lo = t.hi = data.rows[0][c];
      for (const auto& row : data.rows) {
        t.lo = std::min(t.lo, row[c]);
        t.hi = std::max(t.hi, row[c]);
      }
    } else {
      double max_code = 0.0;
      for (const auto& row : data.rows) max_code = std::max(max_code, row[c]);
      t.cardinality = (m.encoder && m.encoder->values.count(c))
                          ? m.encoder->cardinality(c)
                          : static_cast<std::size_t>(max_code) + 1;
      m.cond_columns.push_back(c);
    }
    m.transforms.push_back(t);
  }
  m.conditional = !m.cond_columns.empty();
  if (!m.conditional)
    std::cerr << "warning: no categorical columns; training an unconditional GAN\n";

  std::size_t batch = config.batch;
  if (batch > n) {
    std::cerr << "warning: batch " << batch << " shrunk to the table size " << n << "\n";
    batch = n;
  }

  const auto off = block_offsets(m.transforms);
  const std::size_t W = off.back();
  const std::size_t condW = m.cond_width();

  // log-frequency sampling state and the per-(column, value) row lists
  CondState cs;
  if (m.conditional) {
    std::size_t run = 0;
    for (std::size_t c : m.cond_columns) {
      cs.offsets.push_back(run);
      run += m.transforms[c].cardinality;
      const std::size_t K = m.transforms[c].cardinality;
      std::vector<std::vector<std::size_t>> lists(K);
      std::vector<double> counts(K, 0.0);
      for (std::size_t r = 0; r < n; ++r) {
        const auto code = static_cast<std::size_t>(data.rows[r][c]);
        require(code < K, "gan: code " + std::to_string(code) + " out of range in column " +
                              m.schema.columns[c].name);
        lists[code].push_back(r);
        counts[code] += 1.0;
      }
      std::vector<double> cum(K);
      double acc = 0.0;
      for (std::size_t v = 0; v < K; ++v) {
        acc += std::log1p(counts[v]);
        cum[v] = acc;
      }
      cs.cumulative.push_back(std::move(cum));
      cs.rows_by_value.push_back(std::move(lists));
      m.cond_weights.push_back(std::move(counts));
    }
    for (auto& w : m.cond_weights)
      for (auto& v : w) v = std::log1p(v);
  }

  Rng rng(config.seed);
  init_mlp(m.gen, config.noise_dim + condW, m.gen_dims, W, rng, /*zero_head=*/true);
  init_mlp(m.disc, W + condW, m.disc_dims, 1, rng, /*zero_head=*/false);

  const auto transform_row = [&](const std::vector<double>& row, double* out) {
    for (std::size_t c = 0; c < m.transforms.size(); ++c) {
      const auto& t = m.transforms[c];
      if (t.kind == ColumnKind::continuous) {
        out[off[c]] = scale_to_unit(t, row[c]);
      } else {
        out[off[c] + static_cast<std::size_t>(row[c])] = 1.0;
      }
    }
  };
  const auto fill_cond = [&](const CondBatch& cb, std::size_t r, double* out) {
    out[cs.offsets[cb.cat[r]] + cb.value[r]] = 1.0;
  };

  const std::vector<double> ones(batch, 1.0);
  const std::vector<double> zeros(batch, 0.0);
  const std::size_t steps = std::max<std::size_t>(1, n / batch);

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    double d_sum = 0.0, g_sum = 0.0;
    for (std::size_t step = 0; step < steps; ++step) {
      // ---- discriminator step: real rows drawn to match the conditions ----
      CondBatch cb;
      if (m.conditional) cb = draw_conditions(m, cs, batch, rng);

      auto disc_real = Tensor::make({batch, W + condW});
      for (std::size_t r = 0; r < batch; ++r) {
        std::size_t row;
        if (m.conditional) {
          const auto& pool = cs.rows_by_value[cb.cat[r]][cb.value[r]];
          row = pool[rng.below(pool.size())];
        } else {
          row = rng.below(n);
        }
        double* dst = disc_real->data.data() + r * (W + condW);
        transform_row(data.rows[row], dst);
        if (m.conditional) fill_cond(cb, r, dst + W);
      }

      auto gen_in = Tensor::make({batch, config.noise_dim + condW});
      for (std::size_t r = 0; r < batch; ++r) {
        double* dst = gen_in->data.data() + r * (config.noise_dim + condW);
        for (std::size_t i = 0; i < config.noise_dim; ++i) dst[i] = rng.normal();
        if (m.conditional) fill_cond(cb, r, dst + config.noise_dim);
      }

      std::vector<double> fake_vals;
      {
        Tape scratch;  // forward only; the generator is not updated here
        fake_vals = generator_forward(scratch, m, gen_in)->data;
      }
      auto disc_fake = Tensor::make({batch, W + condW});
      for (std::size_t r = 0; r < batch; ++r) {
        double* dst = disc_fake->data.data() + r * (W + condW);
        std::copy_n(fake_vals.data() + r * W, W, dst);
        if (m.conditional) fill_cond(cb, r, dst + W);
      }

      {
        Tape tape;
        auto p_real = discriminator_prob(tape, m, disc_real);
        auto p_fake = discriminator_prob(tape, m, disc_fake);
        auto loss = tape.add(tape.binary_cross_entropy(p_real, ones),
                             tape.binary_cross_entropy(p_fake, zeros));
        tape.backward(loss);
        optimizer_step(m.disc, Optimizer::adam, config.learning_rate);
        d_sum += loss->data[0];
      }

      // ---- generator step: non-saturating loss + condition penalty ----
      if (m.conditional) cb = draw_conditions(m, cs, batch, rng);
      auto gen_in2 = Tensor::make({batch, config.noise_dim + condW});
      auto cond_leaf = Tensor::make({batch, condW == 0 ? 1 : condW});
      for (std::size_t r = 0; r < batch; ++r) {
        double* dst = gen_in2->data.data() + r * (config.noise_dim + condW);
        for (std::size_t i = 0; i < config.noise_dim; ++i) dst[i] = rng.normal();
        if (m.conditional) {
          fill_cond(cb, r, dst + config.noise_dim);
          fill_cond(cb, r, cond_leaf->data.data() + r * condW);
        }
      }

      m.disc.set_requires_grad(false);  // generator step leaves the critic fixed
      {
        Tape tape;
        auto out = generator_forward(tape, m, gen_in2);
        TensorPtr din = m.conditional ? tape.concat_cols({out, cond_leaf}) : out;
        auto p_fake = discriminator_prob(tape, m, din);
        TensorPtr loss = tape.binary_cross_entropy(p_fake, ones);
        if (m.conditional) {
          std::size_t b = 0;
          while (b < batch) {
            std::size_t e = b;
            while (e < batch && cb.cat[e] == cb.cat[b]) ++e;
            const std::size_t col = m.cond_columns[cb.cat[b]];
            auto block = tape.slice_cols(out, off[col], off[col + 1]);
            auto sub = (b == 0 && e == batch) ? block : tape.slice_rows(block, b, e);
            std::vector<int> targets(cb.value.begin() + b, cb.value.begin() + e);
            auto part = tape.categorical_cross_entropy(sub, targets);
            loss = tape.add(loss, tape.scale(part, static_cast<double>(e - b) / batch));
            b = e;
          }
        }
        tape.backward(loss);
        optimizer_step(m.gen, Optimizer::adam, config.learning_rate);
        g_sum += loss->data[0];
      }
      m.disc.set_requires_grad(true);
    }
    m.disc_loss.push_back(d_sum / static_cast<double>(steps));
    m.gen_loss.push_back(g_sum / static_cast<double>(steps));
  }
  return m;
}

Table sample_gan(const GanModel& gan, std::size_t n, std::uint64_t seed) {
  Table out;
  out.schema = gan.schema;
  out.encoder = gan.encoder;
  if (n == 0) return out;

  const std::size_t condW = gan.cond_width();
  CondState cs;
  if (gan.conditional) {
    std::size_t run = 0;
    for (std::size_t i = 0; i < gan.cond_columns.size(); ++i) {
      cs.offsets.push_back(run);
      run += gan.transforms[gan.cond_columns[i]].cardinality;
      std::vector<double> cum(gan.cond_weights[i].size());
      std::partial_sum(gan.cond_weights[i].begin(), gan.cond_weights[i].end(), cum.begin());
      cs.cumulative.push_back(std::move(cum));
    }
  }

  Rng rng(seed);
  auto input = Tensor::make({n, gan.noise_dim + condW});
  for (std::size_t r = 0; r < n; ++r) {
    double* dst = input->data.data() + r * (gan.noise_dim + condW);
    if (gan.conditional) {
      const std::size_t cat = rng.below(gan.cond_columns.size());
      const std::size_t value = weighted_pick(cs.cumulative[cat], rng);
      dst[gan.noise_dim + cs.offsets[cat] + value] = 1.0;
    }
    for (std::size_t i = 0; i < gan.noise_dim; ++i) dst[i] = rng.normal();
  }

  Tape tape;
  auto gen_out = generator_forward(tape, gan, input);
  const auto off = block_offsets(gan.transforms);
  const std::size_t W = off.back();

  out.rows.reserve(n);
  for (std::size_t r = 0; r < n; ++r) {
    const double* src = gen_out->data.data() + r * W;
    std::vector<double> row(gan.schema.width());
    for (std::size_t c = 0; c < gan.transforms.size(); ++c) {
      const auto& t = gan.transforms[c];
      if (t.kind == ColumnKind::continuous) {
        row[c] = scale_back(t, src[off[c]]);
      } else {
        std::size_t best = 0;
        for (std::size_t v = 1; v < t.cardinality; ++v)
          if (src[off[c] + v] > src[off[c] + best]) best = v;
        row[c] = static_cast<double>(best);
      }
    }
    out.rows.push_back(std::move(row));
  }
  return out;
}

void save_gan(const GanModel& gan, const std::string& params_path, const std::string& meta_path) {
  ParameterSet all;
  for (const auto& e : gan.gen.entries()) all.add("gen." + e.name, e.tensor);
  for (const auto& e : gan.disc.entries()) all.add("disc." + e.name, e.tensor);
  save_params(all, params_path);

  ordered_json j;
  j["schema"] = schema_to_json(gan.schema);
  j["encoder"] = encoder_to_json(gan.encoder);
  j["transforms"] = ordered_json::array();
  for (const auto& t : gan.transforms) {
    if (t.kind == ColumnKind::continuous) {
      j["transforms"].push_back({{"kind", "continuous"}, {"lo", t.lo}, {"hi", t.hi}});
    } else {
      j["transforms"].push_back({{"kind", "categorical"}, {"cardinality", t.cardinality}});
    }
  }
  j["noise_dim"] = gan.noise_dim;
  j["gen_dims"] = gan.gen_dims;
  j["disc_dims"] = gan.disc_dims;
  j["conditional"] = gan.conditional;
  j["cond_columns"] = gan.cond_columns;
  j["cond_weights"] = gan.cond_weights;
  j["disc_loss"] = gan.disc_loss;
  j["gen_loss"] = gan.gen_loss;
  std::ofstream os(meta_path);
  if (!os) throw RuntimeError("cannot write gan metadata: " + meta_path);
  os << j.dump(2) << '\n';
}

GanModel load_gan(const std::string& params_path, const std::string& meta_path) {
  const ordered_json j = read_json_file(meta_path, "gan metadata");
  for (const char* key : {"schema", "encoder", "transforms", "noise_dim", "gen_dims",
                          "disc_dims", "conditional", "cond_columns", "cond_weights"})
    require(j.contains(key), std::string("gan metadata missing ") + key + ": " + meta_path);

  GanModel m;
  m.schema = schema_from_json(j.at("schema"));
  m.encoder = encoder_from_json(j.at("encoder"));
  for (const auto& t : j.at("transforms")) {
    ColumnTransform ct;
    const std::string kind = t.at("kind").get<std::string>();
    if (kind == "continuous") {
      ct.kind = ColumnKind::continuous;
      ct.lo = t.at("lo").get<double>();
      ct.hi = t.at("hi").get<double>();
    } else {
      require(kind == "categorical", "gan transform kind must be continuous or categorical");
      ct.kind = ColumnKind::categorical;
      ct.cardinality = t.at("cardinality").get<std::size_t>();
    }
    m.transforms.push_back(ct);
  }
  require(m.transforms.size() == m.schema.width(),
          "gan metadata transform count does not match its schema");
  m.noise_dim = j.at("noise_dim").get<std::size_t>();
  m.gen_dims = j.at("gen_dims").get<std::vector<std::size_t>>();
  m.disc_dims = j.at("disc_dims").get<std::vector<std::size_t>>();
  m.conditional = j.at("conditional").get<bool>();
  m.cond_columns = j.at("cond_columns").get<std::vector<std::size_t>>();
  m.cond_weights = j.at("cond_weights").get<std::vector<std::vector<double>>>();
  if (j.contains("disc_loss")) m.disc_loss = j.at("disc_loss").get<std::vector<double>>();
  if (j.contains("gen_loss")) m.gen_loss = j.at("gen_loss").get<std::vector<double>>();

  ParameterSet all = load_params(params_path);
  for (auto& e : all.entries()) {
    if (e.name.rfind("gen.", 0) == 0) {
      m.gen.add(e.name.substr(4), e.tensor);
    } else if (e.name.rfind("disc.", 0) == 0) {
      m.disc.add(e.name.substr(5), e.tensor);
    } else {
      throw ValidationError("unexpected parameter " + e.name + " in " + params_path);
    }
  }
  require(m.gen.has("head_b") && m.gen.get("head_b")->size() == m.row_width(),
          "gan parameters do not match the metadata row width");
  return m;
}

AttackSet build_attack_set(const Table& smote_out, const Table& gan_out, GanLabeling labeling,
                           std::uint64_t seed) {
  const Schema& a = smote_out.schema;
  const Schema& b = gan_out.schema;
  require(a.label == b.label && a.width() == b.width(), "attack set sources disagree on schema");
  for (std::size_t i = 0; i < a.width(); ++i)
    require(a.columns[i].name == b.columns[i].name && a.columns[i].kind == b.columns[i].kind,
            "attack set sources disagree on column " + a.columns[i].name);

  AttackSet s;
  s.table.schema = a;
  s.table.encoder = smote_out.encoder ? smote_out.encoder : gan_out.encoder;

  std::vector<std::vector<double>> gan_rows = gan_out.rows;
  if (labeling == GanLabeling::boundary_truth && !gan_rows.empty()) {
    require(!smote_out.rows.empty(), "boundary-truth labeling needs a non-empty smote table");
    const auto features = s.table.feature_indices();
    const std::size_t li = a.label_index();
    for (auto& row : gan_rows) {
      double best = 0.0;
      std::size_t best_row = 0;
      for (std::size_t j = 0; j < smote_out.rows.size(); ++j) {
        double d = 0.0;
        for (std::size_t f : features) {
          const double diff = row[f] - smote_out.rows[j][f];
          d += diff * diff;
        }
        if (j == 0 || d < best) {
          best = d;
          best_row = j;
        }
      }
      row[li] = smote_out.rows[best_row][li];
    }
  }

  for (const auto& r : smote_out.rows) {
    s.table.rows.push_back(r);
    s.provenance.push_back("smote");
  }
  for (auto& r : gan_rows) {
    s.table.rows.push_back(std::move(r));
    s.provenance.push_back("gan");
  }

  Rng rng(seed);
  std::vector<std::size_t> perm(s.table.rows.size());
  std::iota(perm.begin(), perm.end(), 0);
  rng.shuffle(perm);
  std::vector<std::vector<double>> rows(perm.size());
  std::vector<std::string> prov(perm.size());
  for (std::size_t i = 0; i < perm.size(); ++i) {
    rows[i] = std::move(s.table.rows[perm[i]]);
    prov[i] = std::move(s.provenance[perm[i]]);
  }
  s.table.rows = std::move(rows);
  s.provenance = std::move(prov);
  return s;
}

std::vector<AttackReport> evaluate_tabular_attack(const TreeEnsembleModel& m1,
                                                  const TreeEnsembleModel& m2,
                                                  const TreeEnsembleModel& m3,
                                                  const Table& original_test,
                                                  const Table& attack_set) {
  require(attack_set.row_count() > 0, "attack evaluation needs a non-empty attack set");
  std::vector<AttackReport> reports;
  for (const auto* model : {&m1, &m2, &m3}) {
    AttackReport r;
    r.model = model_kind_name(model->kind);
    r.before = evaluate(predict_proba(*model, original_test), original_test.labels());
    r.after = evaluate(predict_proba(*model, attack_set), attack_set.labels());
    r.attack_config = {{"family", "boundary-smote-gan"},
                       {"attack_rows", std::to_string(attack_set.row_count())}};
    r.timestamp = deterministic_timestamp();
    reports.push_back(std::move(r));
  }
  return reports;
}

void write_attack_csv(const AttackSet& set, const std::string& path) {
  require(set.provenance.size() == set.table.row_count(),
          "attack set provenance does not cover every row");
  Table t = set.table;
  const std::size_t col = t.schema.width();
  t.schema.columns.push_back({"source", ColumnKind::categorical});
  EncoderMap enc = t.encoder ? *t.encoder : EncoderMap{};
  enc.values[col] = {"gan", "smote"};
  t.encoder = std::move(enc);
  for (std::size_t i = 0; i < t.rows.size(); ++i)
    t.rows[i].push_back(set.provenance[i] == "smote" ? 1.0 : 0.0);
  write_csv(t, path);
}

void save_attack_set(const AttackSet& set, const std::string& path) {
  require(set.provenance.size() == set.table.row_count(),
          "attack set provenance does not cover every row");
  ordered_json j;
  j["schema"] = schema_to_json(set.table.schema);
  j["encoder"] = encoder_to_json(set.table.encoder);
  j["rows"] = set.table.rows;
  j["provenance"] = set.provenance;
  std::ofstream os(path);
  if (!os) throw RuntimeError("cannot write attack set: " + path);
  os << j.dump() << '\n';
}

AttackSet load_attack_set(const std::string& path) {
  const ordered_json j = read_json_file(path, "attack set");
  require(j.contains("schema") && j.contains("encoder") && j.contains("rows") &&
              j.contains("provenance"),
          "attack set file missing schema/encoder/rows/provenance: " + path);
  AttackSet s;
  s.table.schema = schema_from_json(j.at("schema"));
  s.table.encoder = encoder_from_json(j.at("encoder"));
  s.table.rows = j.at("rows").get<std::vector<std::vector<double>>>();
  s.provenance = j.at("provenance").get<std::vector<std::string>>();
  require(s.provenance.size() == s.table.rows.size(),
          "attack set provenance does not cover every row: " + path);
  return s;
}

}  // namespace advforge
