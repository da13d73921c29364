#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <string>

#include "advforge/error.hpp"
#include "advforge/tabular.hpp"
#include "advforge/trees.hpp"

using namespace advforge;

namespace {

void write_file(const std::string& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  os << text;
}

Schema tiny_schema() {
  Schema s;
  s.columns = {{"amount", ColumnKind::continuous},
               {"payment_type", ColumnKind::categorical},
               {"fraud_bool", ColumnKind::categorical}};
  s.label = "fraud_bool";
  return s;
}

// multiset of rows for partition checks
std::multiset<std::vector<double>> row_multiset(const Table& t) {
  return {t.rows.begin(), t.rows.end()};
}

struct TempFile {
  std::string path;
  explicit TempFile(std::string p) : path(std::move(p)) {}
  ~TempFile() { std::remove(path.c_str()); }
};

}  // namespace

TEST_CASE("load_csv: three-row smoke") {
  TempFile f("smoke.csv");
  write_file(f.path,
             "amount,payment_type,fraud_bool\n"
             "10.5,card,0\n"
             "3.25,wire,1\n"
             "7,card,0\n");
  Table t = load_csv(f.path, tiny_schema());
  REQUIRE(t.row_count() == 3);
  CHECK_FALSE(t.encoded());
  CHECK(t.rows[0][0] == 10.5);
  CHECK(t.rows[2][0] == 7.0);
  CHECK(t.raw_cats[1][0] == "wire");
  CHECK(t.raw_cats[1][1] == "1");
}

TEST_CASE("load_csv: permuted header matches by name") {
  TempFile a("order_a.csv"), b("order_b.csv");
  write_file(a.path, "amount,payment_type,fraud_bool\n1.5,card,0\n2.5,wire,1\n");
  write_file(b.path, "fraud_bool,amount,payment_type\n0,1.5,card\n1,2.5,wire\n");
  Table ta = load_csv(a.path, tiny_schema());
  Table tb = load_csv(b.path, tiny_schema());
  CHECK(ta.rows == tb.rows);
  CHECK(ta.raw_cats == tb.raw_cats);
}

TEST_CASE("load_csv: bad numeric cell cites row and column") {
  TempFile f("badnum.csv");
  std::string body = "amount,payment_type,fraud_bool\n";
  for (int i = 1; i <= 6; ++i) body += "1.0,card,0\n";
  body += "abc,card,1\n";
  write_file(f.path, body);
  try {
    load_csv(f.path, tiny_schema());
    FAIL("expected rejection");
  } catch (const ValidationError& e) {
    std::string msg = e.what();
    CHECK(msg.find("row 7") != std::string::npos);
    CHECK(msg.find("amount") != std::string::npos);
    CHECK(msg.find("abc") != std::string::npos);
  }
}

TEST_CASE("load_csv: structural rejections") {
  TempFile f("struct.csv");
  write_file(f.path, "amount,fraud_bool\n1.0,0\n");
  CHECK_THROWS_AS(load_csv(f.path, tiny_schema()), ValidationError);  // missing payment_type
  try {
    load_csv(f.path, tiny_schema());
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("payment_type") != std::string::npos);
  }

  write_file(f.path, "");
  CHECK_THROWS_AS(load_csv(f.path, tiny_schema()), ValidationError);  // empty

  write_file(f.path, "amount,payment_type,fraud_bool\n");
  CHECK_THROWS_AS(load_csv(f.path, tiny_schema()), ValidationError);  // header only

  write_file(f.path, "amount,payment_type,fraud_bool\n1.0,card\n");
  CHECK_THROWS_AS(load_csv(f.path, tiny_schema()), ValidationError);  // short row

  write_file(f.path, "amount,payment_type,fraud_bool\n1.0,,0\n");
  CHECK_THROWS_AS(load_csv(f.path, tiny_schema()), ValidationError);  // missing value

  CHECK_THROWS_AS(load_csv("no_such_file.csv", tiny_schema()), RuntimeError);
}

TEST_CASE("load_csv: quoted fields") {
  TempFile f("quoted.csv");
  write_file(f.path,
             "amount,payment_type,fraud_bool\n"
             "1.0,\"card, gold\",0\n"
             "2.0,\"say \"\"hi\"\"\",1\n");
  Table t = load_csv(f.path, tiny_schema());
  CHECK(t.raw_cats[0][0] == "card, gold");
  CHECK(t.raw_cats[1][0] == "say \"hi\"");
}

TEST_CASE("label_encode: sorted-order codes") {
  TempFile f("enc.csv");
  write_file(f.path,
             "amount,payment_type,fraud_bool\n"
             "1.0,BB,yes\n"
             "2.0,AA,no\n"
             "3.0,BB,yes\n");
  auto [t, enc] = label_encode(load_csv(f.path, tiny_schema()));
  CHECK(t.encoded());
  CHECK(enc.values.at(1) == std::vector<std::string>{"AA", "BB"});
  CHECK(t.rows[0][1] == 1.0);
  CHECK(t.rows[1][1] == 0.0);
  CHECK(t.rows[2][1] == 1.0);
  // label: "no" < "yes" lexicographically
  CHECK(t.rows[0][2] == 1.0);
  CHECK(t.rows[1][2] == 0.0);
  // round trip
  CHECK(enc.decode(1, enc.encode(1, "AA")) == "AA");
  CHECK(enc.decode(1, enc.encode(1, "BB")) == "BB");
  CHECK_THROWS_AS(enc.encode(1, "CC"), ValidationError);
  // single distinct value in a categorical column
  CHECK(enc.cardinality(1) == 2);
  CHECK_THROWS_AS(label_encode(t), ValidationError);  // already encoded
}

TEST_CASE("label_encode: single-valued categorical gets all-zero codes") {
  Schema s;
  s.columns = {{"x", ColumnKind::categorical}, {"y", ColumnKind::categorical}};
  s.label = "y";
  TempFile f("single.csv");
  write_file(f.path, "x,y\nonly,0\nonly,1\nonly,0\n");
  auto [t, enc] = label_encode(load_csv(f.path, s));
  for (const auto& row : t.rows) CHECK(row[0] == 0.0);
  CHECK(enc.cardinality(0) == 1);
}

TEST_CASE("label_encode: non-binary label rejected") {
  TempFile f("tri.csv");
  write_file(f.path, "amount,payment_type,fraud_bool\n1,card,a\n2,card,b\n3,card,c\n");
  CHECK_THROWS_AS(label_encode(load_csv(f.path, tiny_schema())), ValidationError);
}

TEST_CASE("schema json round trip and validation") {
  Schema s = tiny_schema();
  TempFile f("schema.json");
  s.to_json_file(f.path);
  Schema r = Schema::from_json_file(f.path);
  CHECK(r.label == s.label);
  REQUIRE(r.columns.size() == s.columns.size());
  for (std::size_t i = 0; i < s.columns.size(); ++i) {
    CHECK(r.columns[i].name == s.columns[i].name);
    CHECK((r.columns[i].kind == s.columns[i].kind));
  }

  Schema bad = s;
  bad.columns[2].kind = ColumnKind::continuous;  // label must be categorical
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  bad = s;
  bad.columns.push_back({"amount", ColumnKind::continuous});
  CHECK_THROWS_AS(bad.validate(), ValidationError);  // duplicate name
  CHECK_THROWS_AS(Schema::from_json_file("missing.json"), RuntimeError);
}

TEST_CASE("balance_classes equalizes and subsets") {
  Table t = synth_fraud(3000, 6, 2, 0.05, 17);
  auto [z, o] = t.class_counts();
  REQUIRE(o == 150);
  REQUIRE(z == 2850);

  Table b = balance_classes(t, 99);
  auto [bz, bo] = b.class_counts();
  CHECK(bz == 150);
  CHECK(bo == 150);

  // sub-multiset of the input
  auto parent = row_multiset(t);
  for (const auto& row : b.rows) {
    auto it = parent.find(row);
    REQUIRE(it != parent.end());
    parent.erase(it);
  }

  // different seeds pick different majority subsets (overwhelmingly)
  Table b2 = balance_classes(t, 100);
  CHECK(row_multiset(b) != row_multiset(b2));
  // same seed identical
  Table b3 = balance_classes(t, 99);
  CHECK(b3.rows == b.rows);
}

TEST_CASE("balance_classes: already balanced input returns the same multiset") {
  Table t = synth_fraud(400, 4, 1, 0.5, 3);
  auto [z, o] = t.class_counts();
  REQUIRE(z == o);
  Table b = balance_classes(t, 1);
  CHECK(row_multiset(b) == row_multiset(t));
}

TEST_CASE("balance_classes: caps and degenerate classes") {
  Table t = synth_fraud(200, 3, 1, 0.1, 7);  // 20 fraud, 180 clean
  Table capped = balance_classes(t, 5, 12);
  auto [z, o] = capped.class_counts();
  CHECK(z == 12);
  CHECK(o == 12);

  Table single;
  single.schema = t.schema;
  for (const auto& row : t.rows)
    if (row.back() == 0.0) single.rows.push_back(row);
  CHECK_THROWS_AS(balance_classes(single, 1), ValidationError);
}

TEST_CASE("train_test_split: sizes and partition") {
  Table t = synth_fraud(20000, 4, 1, 0.011, 21);
  auto [train, test] = train_test_split(t, 0.2, 5);
  CHECK(train.row_count() == 16000);
  CHECK(test.row_count() == 4000);

  auto all = row_multiset(train);
  for (const auto& row : test.rows) all.insert(row);
  CHECK(all == row_multiset(t));

  Table small = synth_fraud(10, 2, 1, 0.5, 2);
  auto [tr, te] = train_test_split(small, 0.5, 9);
  CHECK(tr.row_count() == 5);
  CHECK(te.row_count() == 5);

  CHECK_THROWS_AS(train_test_split(t, 0.0, 1), ValidationError);
  CHECK_THROWS_AS(train_test_split(t, 1.0, 1), ValidationError);
}

TEST_CASE("synth_fraud: exact label count and determinism") {
  Table t = synth_fraud(20000, 28, 4, 0.011, 42);
  CHECK(t.schema.width() == 33);
  CHECK(t.schema.label == "fraud_bool");
  auto [z, o] = t.class_counts();
  CHECK(o == 220);
  CHECK(z == 19780);

  Table t2 = synth_fraud(20000, 28, 4, 0.011, 42);
  CHECK(t.rows == t2.rows);
  Table t3 = synth_fraud(20000, 28, 4, 0.011, 43);
  CHECK(t.rows != t3.rows);

  // categorical codes stay inside their cardinalities
  const std::size_t cards[4] = {5, 4, 3, 6};
  for (const auto& row : t.rows)
    for (std::size_t c = 0; c < 4; ++c) {
      CHECK(row[28 + c] >= 0.0);
      CHECK(row[28 + c] < static_cast<double>(cards[c]));
      CHECK(row[28 + c] == std::floor(row[28 + c]));
    }
}

TEST_CASE("synth_fraud: depth-3 tree separates the classes") {
  Table t = synth_fraud(4000, 28, 4, 0.05, 11);
  Table balanced = balance_classes(t, 11);
  auto [train, test] = train_test_split(balanced, 0.2, 11);
  auto model = train_decision_tree(train, 3, 5, 11);
  auto probs = predict_proba(model, test);
  auto preds = hard_predictions(probs);
  auto y = test.labels();
  std::size_t correct = 0;
  for (std::size_t i = 0; i < y.size(); ++i) correct += preds[i] == y[i];
  const double acc = static_cast<double>(correct) / static_cast<double>(y.size());
  CHECK(acc >= 0.75);
}

TEST_CASE("csv write/load round trip on synthetic data") {
  Table t = synth_fraud(50, 3, 2, 0.2, 8);
  TempFile f("round.csv");
  write_csv(t, f.path);
  Table back = load_csv(f.path, t.schema);
  auto [enc, _] = label_encode(back);
  REQUIRE(enc.row_count() == t.row_count());
  // codes are single digits here, so lexicographic re-encoding is the identity
  for (std::size_t r = 0; r < t.row_count(); ++r)
    for (std::size_t c = 0; c < t.schema.width(); ++c)
      CHECK(enc.rows[r][c] == doctest::Approx(t.rows[r][c]).epsilon(1e-12));
}
