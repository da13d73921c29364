#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <functional>
#include <vector>

#include "advforge/error.hpp"
#include "advforge/params.hpp"
#include "advforge/rng.hpp"
#include "advforge/tensor.hpp"

using namespace advforge;

namespace {

// Central finite differences against reverse-mode gradients.  The builder must
// construct the loss from the given tensors on the supplied tape so the same
// graph can be re-evaluated after perturbation.
void fd_check(const std::vector<TensorPtr>& leaves,
              const std::function<TensorPtr(Tape&)>& build, Rng& rng,
              std::size_t coords_per_leaf = 6, double h = 1e-4, double rel = 1e-3,
              double atol = 1e-7) {
  Tape tape;
  auto loss = build(tape);
  REQUIRE(loss->size() == 1);
  tape.backward(loss);
  std::vector<std::vector<double>> grads;
  for (const auto& t : leaves) {
    REQUIRE(t->grad.size() == t->size());
    grads.push_back(t->grad);
  }

  auto eval = [&] {
    Tape fresh;
    return build(fresh)->data[0];
  };

  for (std::size_t li = 0; li < leaves.size(); ++li) {
    auto& t = *leaves[li];
    const std::size_t n = t.size();
    for (std::size_t k = 0; k < std::min(coords_per_leaf, n); ++k) {
      std::size_t i = (n <= coords_per_leaf) ? k : rng.below(n);
      const double keep = t.data[i];
      t.data[i] = keep + h;
      double fp = eval();
      t.data[i] = keep - h;
      double fm = eval();
      t.data[i] = keep;
      const double fd = (fp - fm) / (2.0 * h);
      const double g = grads[li][i];
      const double err = std::abs(g - fd);
      const double tol = rel * std::max(std::abs(g), std::abs(fd)) + atol;
      if (err > tol)
        FAIL_CHECK("leaf " << li << " coord " << i << ": grad " << g << " vs fd " << fd
                           << " (err " << err << " tol " << tol << ")");
    }
  }
}

TensorPtr rand_tensor(Rng& rng, std::vector<std::size_t> shape, double lo = -1.0,
                      double hi = 1.0, bool requires_grad = true) {
  auto t = Tensor::make(std::move(shape), requires_grad);
  for (auto& v : t->data) v = rng.uniform(lo, hi);
  return t;
}

}  // namespace

// ---------------------------------------------------------------------------
// frozen forward examples

TEST_CASE("conv2d: ones 3x3 against ones 2x2 gives all fours") {
  Tape tape;
  auto x = Tensor::from({1, 1, 3, 3}, std::vector<double>(9, 1.0));
  auto w = Tensor::from({1, 1, 2, 2}, std::vector<double>(4, 1.0));
  auto b = Tensor::from({1}, {0.0});
  auto y = tape.conv2d(x, w, b, 1);
  CHECK(y->shape == std::vector<std::size_t>{1, 1, 2, 2});
  for (double v : y->data) CHECK(v == 4.0);
}

TEST_CASE("conv2d: centered identity kernel reproduces the interior") {
  Tape tape;
  Rng rng(3);
  auto x = rand_tensor(rng, {1, 1, 5, 5});
  auto w = Tensor::from({1, 1, 3, 3}, {0, 0, 0, 0, 1, 0, 0, 0, 0});
  auto b = Tensor::from({1}, {0.0});
  auto y = tape.conv2d(x, w, b, 1);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j)
      CHECK(y->data[i * 3 + j] == x->data[(i + 1) * 5 + (j + 1)]);
}

TEST_CASE("conv2d: stride 2 output geometry") {
  Tape tape;
  auto x = Tensor::make({2, 3, 7, 9});
  auto w = Tensor::make({4, 3, 3, 3});
  auto b = Tensor::make({4});
  auto y = tape.conv2d(x, w, b, 2);
  CHECK(y->shape == std::vector<std::size_t>{2, 4, 3, 4});
}

TEST_CASE("softmax: uniform logits over 40 classes") {
  Tape tape;
  auto z = Tensor::from({1, 40}, std::vector<double>(40, 0.7));
  auto p = tape.softmax(z);
  for (double v : p->data) CHECK(v == doctest::Approx(0.025).epsilon(1e-12));
  auto loss = tape.categorical_cross_entropy(p, std::vector<int>{13});
  CHECK(loss->data[0] == doctest::Approx(std::log(40.0)).epsilon(1e-12));
}

TEST_CASE("relu values") {
  Tape tape;
  auto x = Tensor::from({3}, {-1.0, 0.0, 2.0});
  auto y = tape.relu(x);
  CHECK(y->data == std::vector<double>{0.0, 0.0, 2.0});
}

TEST_CASE("maxpool2: forward value and gradient routing") {
  Tape tape;
  auto x = Tensor::from({1, 1, 2, 2}, {1.0, 2.0, 3.0, 4.0}, true);
  auto y = tape.maxpool2(x);
  CHECK(y->size() == 1);
  CHECK(y->data[0] == 4.0);
  tape.backward(tape.sum(y));
  CHECK(x->grad == std::vector<double>{0.0, 0.0, 0.0, 1.0});
}

TEST_CASE("maxpool2: ties route to the first position in scan order") {
  Tape tape;
  auto x = Tensor::from({1, 1, 2, 2}, {5.0, 5.0, 5.0, 5.0}, true);
  auto y = tape.maxpool2(x);
  tape.backward(tape.sum(y));
  CHECK(x->grad == std::vector<double>{1.0, 0.0, 0.0, 0.0});
}

TEST_CASE("maxpool2: odd extents are floored") {
  Tape tape;
  auto x = Tensor::make({1, 2, 5, 7});
  auto y = tape.maxpool2(x);
  CHECK(y->shape == std::vector<std::size_t>{1, 2, 2, 3});
}

TEST_CASE("sum of squares gradient") {
  Tape tape;
  auto x = Tensor::from({3}, {1.0, 2.0, 3.0}, true);
  auto loss = tape.sum(tape.mul(x, x));
  CHECK(loss->data[0] == 14.0);
  tape.backward(loss);
  CHECK(x->grad == std::vector<double>{2.0, 4.0, 6.0});
}

TEST_CASE("cce one-hot overload matches index overload") {
  Tape t1, t2;
  Rng rng(5);
  auto z = rand_tensor(rng, {4, 6});
  auto p1 = t1.softmax(z);
  auto l1 = t1.categorical_cross_entropy(p1, std::vector<int>{2, 0, 5, 1});
  auto hot = Tensor::make({4, 6});
  hot->data[0 * 6 + 2] = hot->data[1 * 6 + 0] = hot->data[2 * 6 + 5] = hot->data[3 * 6 + 1] = 1.0;
  auto p2 = t2.softmax(z);
  auto l2 = t2.categorical_cross_entropy(p2, hot);
  CHECK(l1->data[0] == l2->data[0]);
}

TEST_CASE("structural ops: reshape, slice, concat, pick") {
  Tape tape;
  auto x = Tensor::from({2, 3}, {1, 2, 3, 4, 5, 6}, true);
  auto r = tape.reshape(x, {3, 2});
  CHECK(r->data == x->data);

  auto s = tape.slice_cols(x, 1, 3);
  CHECK(s->data == std::vector<double>{2, 3, 5, 6});

  auto c = tape.concat_cols({s, s});
  CHECK(c->shape == std::vector<std::size_t>{2, 4});
  CHECK(c->data == std::vector<double>{2, 3, 2, 3, 5, 6, 5, 6});

  auto p = tape.pick(x, 4);
  CHECK(p->data[0] == 5.0);
  tape.backward(p);
  CHECK(x->grad[4] == 1.0);
  CHECK(x->grad[0] == 0.0);
}

TEST_CASE("slice_rows values and gradient routing") {
  Tape tape;
  auto x = Tensor::from({3, 2}, {1, 2, 3, 4, 5, 6}, true);
  auto s = tape.slice_rows(x, 1, 3);
  CHECK(s->shape == std::vector<std::size_t>{2, 2});
  CHECK(s->data == std::vector<double>{3, 4, 5, 6});
  tape.backward(tape.sum(tape.mul(s, s)));
  CHECK(x->grad == std::vector<double>{0, 0, 6, 8, 10, 12});
  CHECK_THROWS_AS(tape.slice_rows(x, 2, 4), ValidationError);
}

TEST_CASE("clamp01 passes gradient only inside the box") {
  Tape tape;
  auto x = Tensor::from({4}, {-0.5, 0.25, 0.75, 1.5}, true);
  auto y = tape.clamp01(x);
  CHECK(y->data == std::vector<double>{0.0, 0.25, 0.75, 1.0});
  tape.backward(tape.sum(y));
  CHECK(x->grad == std::vector<double>{0.0, 1.0, 1.0, 0.0});
}

TEST_CASE("backward validation") {
  Tape tape;
  auto x = Tensor::from({2}, {1.0, 2.0}, true);
  auto y = tape.mul(x, x);
  CHECK_THROWS_AS(tape.backward(y), ValidationError);  // not scalar
  Tape other;
  auto z = other.sum(y);
  CHECK_THROWS_AS(tape.backward(z), ValidationError);  // produced elsewhere
}

TEST_CASE("shape validation errors") {
  Tape tape;
  auto a = Tensor::make({2, 3});
  auto b = Tensor::make({3, 2});
  CHECK_THROWS_AS(tape.add(a, b), ValidationError);
  CHECK_THROWS_AS(tape.dense(a, Tensor::make({4, 2}), Tensor::make({2})), ValidationError);
  CHECK_THROWS_AS(tape.conv2d(Tensor::make({1, 1, 2, 2}), Tensor::make({1, 1, 3, 3}),
                              Tensor::make({1}), 1),
                  ValidationError);
  CHECK_THROWS_AS(tape.categorical_cross_entropy(Tensor::from({1, 2}, {0.5, 0.5}),
                                                 std::vector<int>{2}),
                  ValidationError);
}

// ---------------------------------------------------------------------------
// finite-difference oracles

TEST_CASE("fd: dense + smooth activations") {
  Rng rng(101);
  for (int trial = 0; trial < 10; ++trial) {
    auto x = rand_tensor(rng, {3, 5});
    auto w = rand_tensor(rng, {5, 4});
    auto b = rand_tensor(rng, {4});
    auto w2 = rand_tensor(rng, {4, 2});
    auto b2 = rand_tensor(rng, {2});
    fd_check({x, w, b, w2, b2}, [&](Tape& t) {
      auto h = t.tanh(t.dense(x, w, b));
      auto z = t.dense(h, w2, b2);
      return t.mean(t.mul(z, z));
    }, rng);
  }
}

TEST_CASE("fd: sigmoid and bce") {
  Rng rng(102);
  std::vector<double> targets{1.0, 0.0, 1.0};
  for (int trial = 0; trial < 10; ++trial) {
    auto x = rand_tensor(rng, {3, 4});
    auto w = rand_tensor(rng, {4, 1});
    auto b = rand_tensor(rng, {1});
    fd_check({x, w, b}, [&](Tape& t) {
      auto p = t.sigmoid(t.reshape(t.dense(x, w, b), {3}));
      return t.binary_cross_entropy(p, targets);
    }, rng);
  }
}

TEST_CASE("fd: softmax cross entropy") {
  Rng rng(103);
  std::vector<int> targets{2, 0, 4};
  for (int trial = 0; trial < 10; ++trial) {
    auto z = rand_tensor(rng, {3, 5}, -2.0, 2.0);
    fd_check({z}, [&](Tape& t) {
      return t.categorical_cross_entropy(t.softmax(z), targets);
    }, rng, 15);
  }
}

TEST_CASE("fd: conv2d all leaves") {
  Rng rng(104);
  for (int trial = 0; trial < 6; ++trial) {
    auto x = rand_tensor(rng, {2, 2, 5, 5});
    auto w = rand_tensor(rng, {3, 2, 3, 3});
    auto b = rand_tensor(rng, {3});
    fd_check({x, w, b}, [&](Tape& t) {
      auto y = t.tanh(t.conv2d(x, w, b, 1));
      return t.mean(t.mul(y, y));
    }, rng);
  }
}

TEST_CASE("fd: conv2d stride 2") {
  Rng rng(105);
  auto x = rand_tensor(rng, {1, 2, 7, 7});
  auto w = rand_tensor(rng, {2, 2, 3, 3});
  auto b = rand_tensor(rng, {2});
  fd_check({x, w, b}, [&](Tape& t) {
    auto y = t.conv2d(x, w, b, 2);
    return t.mean(t.mul(y, y));
  }, rng, 10);
}

TEST_CASE("fd: relu and maxpool away from kinks") {
  Rng rng(106);
  for (int trial = 0; trial < 6; ++trial) {
    // keep values off exact zeros / exact pool ties so h=1e-4 stays on one side
    auto x = Tensor::make({1, 2, 4, 4}, true);
    for (auto& v : x->data) {
      v = rng.uniform(-1.0, 1.0);
      if (std::abs(v) < 0.05) v += (v >= 0.0 ? 0.05 : -0.05);
    }
    auto w = rand_tensor(rng, {8, 2});
    auto b = rand_tensor(rng, {2});
    fd_check({x, w, b}, [&](Tape& t) {
      auto p = t.maxpool2(t.relu(x));
      auto f = t.reshape(p, {1, 8});
      return t.mean(t.mul(t.dense(f, w, b), t.dense(f, w, b)));
    }, rng, 12);
  }
}

TEST_CASE("fd: small cnn end to end") {
  Rng rng(107);
  auto x = rand_tensor(rng, {2, 1, 8, 8}, 0.0, 1.0);
  auto k1 = rand_tensor(rng, {4, 1, 3, 3}, -0.4, 0.4);
  auto b1 = rand_tensor(rng, {4}, -0.1, 0.1);
  auto w = rand_tensor(rng, {4 * 3 * 3, 5}, -0.3, 0.3);
  auto b = rand_tensor(rng, {5}, -0.1, 0.1);
  std::vector<int> targets{1, 3};
  fd_check({x, k1, b1, w, b}, [&](Tape& t) {
    auto c = t.maxpool2(t.relu(t.conv2d(x, k1, b1, 1)));  // -> [2,4,3,3]
    auto f = t.reshape(c, {2, 4 * 3 * 3});
    auto p = t.softmax(t.dense(f, w, b));
    return t.categorical_cross_entropy(p, targets);
  }, rng, 20);
}

TEST_CASE("fd: clamp01 and clamp_min interior points") {
  Rng rng(108);
  auto x = rand_tensor(rng, {12}, 0.1, 0.9);
  fd_check({x}, [&](Tape& t) {
    auto y = t.clamp01(x);
    return t.sum(t.mul(y, y));
  }, rng, 12);
  auto z = rand_tensor(rng, {12}, 0.5, 2.0);
  fd_check({z}, [&](Tape& t) {
    auto y = t.clamp_min(z, 0.2);
    return t.sum(t.mul(y, y));
  }, rng, 12);
}

TEST_CASE("fd: randomized composite graphs, 100+ coordinate checks") {
  std::size_t checked = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    Rng rng(seed * 977);
    auto x = rand_tensor(rng, {4, 6});
    auto w1 = rand_tensor(rng, {6, 6});
    auto b1 = rand_tensor(rng, {6});
    auto w2 = rand_tensor(rng, {6, 3});
    auto b2 = rand_tensor(rng, {3});
    std::vector<int> targets{0, 2, 1, 2};
    fd_check({x, w1, b1, w2, b2}, [&](Tape& t) {
      auto h = t.tanh(t.dense(x, w1, b1));
      auto g = t.sigmoid(t.dense(h, w2, b2));
      auto p = t.softmax(t.dense(h, w2, b2));
      auto a = t.categorical_cross_entropy(p, targets);
      auto b = t.mean(t.mul(g, g));
      return t.add(a, t.scale(b, 0.5));
    }, rng, 5);
    checked += 5 * 5;  // 5 leaves x 5 coords per seed
  }
  CHECK(checked >= 100);
}

// ---------------------------------------------------------------------------
// determinism

TEST_CASE("identical graphs give bit-identical values and gradients") {
  auto run = [] {
    Rng rng(31);
    auto x = rand_tensor(rng, {3, 1, 6, 6});
    auto k = rand_tensor(rng, {2, 1, 3, 3});
    auto kb = rand_tensor(rng, {2});
    auto w = rand_tensor(rng, {2 * 2 * 2, 4});
    auto b = rand_tensor(rng, {4});
    Tape t;
    auto c = t.maxpool2(t.relu(t.conv2d(x, k, kb, 1)));
    auto p = t.softmax(t.dense(t.reshape(c, {3, 8}), w, b));
    auto loss = t.categorical_cross_entropy(p, std::vector<int>{0, 1, 2});
    t.backward(loss);
    std::vector<double> result{loss->data[0]};
    result.insert(result.end(), x->grad.begin(), x->grad.end());
    result.insert(result.end(), k->grad.begin(), k->grad.end());
    return result;
  };
  CHECK(run() == run());
}

// ---------------------------------------------------------------------------
// optimizer + serialization

TEST_CASE("sgd step") {
  ParameterSet ps;
  auto p = ps.add("w", Tensor::from({1}, {1.0}));
  p->ensure_grad();
  p->grad[0] = 1.0;
  optimizer_step(ps, Optimizer::sgd, 0.1);
  CHECK(p->data[0] == doctest::Approx(0.9).epsilon(1e-15));
  CHECK(p->grad[0] == 0.0);
  CHECK(ps.step_count() == 1);
}

TEST_CASE("sgd with zero gradient leaves parameter unchanged") {
  ParameterSet ps;
  auto p = ps.add("w", Tensor::from({1}, {2.5}));
  p->ensure_grad();
  optimizer_step(ps, Optimizer::sgd, 0.5);
  CHECK(p->data[0] == 2.5);
}

TEST_CASE("adam first step moves by about -lr * sign(g)") {
  for (double g : {0.3, -1.7, 42.0, -0.001}) {
    ParameterSet ps;
    auto p = ps.add("w", Tensor::from({1}, {0.0}));
    p->ensure_grad();
    p->grad[0] = g;
    optimizer_step(ps, Optimizer::adam, 0.01);
    // bias-corrected first step: -lr * g / (|g| + eps)
    CHECK(p->data[0] == doctest::Approx(-0.01 * (g > 0 ? 1.0 : -1.0)).epsilon(1e-4));
  }
}

TEST_CASE("adam matches a hand-rolled reference over several steps") {
  ParameterSet ps;
  auto p = ps.add("w", Tensor::from({2}, {0.5, -0.25}));
  double m[2] = {0, 0}, v[2] = {0, 0}, ref[2] = {0.5, -0.25};
  Rng rng(9);
  for (int step = 1; step <= 20; ++step) {
    double g[2] = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
    p->ensure_grad();
    p->grad[0] = g[0];
    p->grad[1] = g[1];
    optimizer_step(ps, Optimizer::adam, 0.005);
    for (int i = 0; i < 2; ++i) {
      m[i] = 0.9 * m[i] + 0.1 * g[i];
      v[i] = 0.999 * v[i] + 0.001 * g[i] * g[i];
      double mh = m[i] / (1.0 - std::pow(0.9, step));
      double vh = v[i] / (1.0 - std::pow(0.999, step));
      ref[i] -= 0.005 * mh / (std::sqrt(vh) + 1e-8);
      CHECK(p->data[i] == doctest::Approx(ref[i]).epsilon(1e-12));
    }
  }
}

TEST_CASE("missing gradient is rejected with the parameter name") {
  ParameterSet ps;
  ps.add("conv1_bias", Tensor::from({2}, {0.0, 0.0}));
  try {
    optimizer_step(ps, Optimizer::sgd, 0.1);
    FAIL("expected rejection");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("conv1_bias") != std::string::npos);
  }
}

TEST_CASE("frozen parameters are skipped without needing gradients") {
  ParameterSet ps;
  auto p = ps.add("w", Tensor::from({1}, {1.0}));
  ps.set_requires_grad(false);
  optimizer_step(ps, Optimizer::sgd, 0.1);  // no grad populated: fine when frozen
  CHECK(p->data[0] == 1.0);
}

TEST_CASE("model container round trip") {
  ParameterSet ps;
  Rng rng(55);
  // values chosen representable in binary32 so the round trip is exact
  auto a = Tensor::make({3, 4});
  for (auto& v : a->data) v = static_cast<double>(static_cast<float>(rng.uniform(-2, 2)));
  auto b = Tensor::make({7});
  for (auto& v : b->data) v = static_cast<double>(static_cast<float>(rng.normal()));
  ps.add("layer0_weight", a);
  ps.add("layer0_bias", b);

  const std::string path = "roundtrip_test.advf";
  save_params(ps, path);
  auto loaded = load_params(path);
  REQUIRE(loaded.size() == 2);
  CHECK(loaded.entries()[0].name == "layer0_weight");
  CHECK(loaded.entries()[1].name == "layer0_bias");
  CHECK(loaded.get("layer0_weight")->shape == a->shape);
  CHECK(loaded.get("layer0_weight")->data == a->data);
  CHECK(loaded.get("layer0_bias")->data == b->data);
  std::remove(path.c_str());
}

TEST_CASE("container header is the documented layout") {
  ParameterSet ps;
  ps.add("w", Tensor::from({2}, {1.0, 2.0}));
  const std::string path = "header_test.advf";
  save_params(ps, path);
  FILE* f = std::fopen(path.c_str(), "rb");
  REQUIRE(f != nullptr);
  unsigned char buf[64];
  std::size_t got = std::fread(buf, 1, sizeof buf, f);
  std::fclose(f);
  std::remove(path.c_str());
  // magic, version 1 LE, count 1 LE, name len 1 LE, 'w', rank 1 LE, dim 2 LE, 1.0f, 2.0f
  REQUIRE(got == 4 + 4 + 4 + 4 + 1 + 4 + 8 + 8);
  CHECK(buf[0] == 'A');
  CHECK(buf[1] == 'D');
  CHECK(buf[2] == 'V');
  CHECK(buf[3] == 'F');
  CHECK(buf[4] == 1);
  CHECK(buf[8] == 1);
  CHECK(buf[12] == 1);
  CHECK(buf[16] == 'w');
  CHECK(buf[17] == 1);
  CHECK(buf[21] == 2);  // dim as u64 LE
  float f1, f2;
  std::memcpy(&f1, buf + 29, 4);
  std::memcpy(&f2, buf + 33, 4);
  CHECK(f1 == 1.0f);
  CHECK(f2 == 2.0f);
}

TEST_CASE("loading garbage is rejected") {
  const std::string path = "bad_test.advf";
  FILE* f = std::fopen(path.c_str(), "wb");
  std::fputs("not a container", f);
  std::fclose(f);
  CHECK_THROWS_AS(load_params(path), ValidationError);
  std::remove(path.c_str());
  CHECK_THROWS_AS(load_params("does_not_exist.advf"), RuntimeError);
}
