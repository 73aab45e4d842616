#include "doctest.h"
#include "mabs/pool.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace mabs;

namespace {

SourcePool tiny_pool() {
  std::vector<MetaColumn> schema = {{"site", MetaKind::categorical},
                                    {"age", MetaKind::numeric}};
  SourcePool pool(schema, 3);
  pool.encode_category(0, "hospital_a");
  pool.encode_category(0, "hospital_b");
  pool.add_sample(1, {0.0, 42.0}, {0.1, 0.2, 0.3}, 42.0);
  pool.add_sample(2, {1.0, 63.0}, {0.4, 0.5, 0.6}, 63.0);
  pool.add_sample(3, {0.0, 55.0}, {0.7, 0.8, 0.9}, 55.0);
  return pool;
}

std::filesystem::path write_temp_csv(const std::string& name, const std::string& content) {
  const auto path = std::filesystem::temp_directory_path() / name;
  std::ofstream out(path, std::ios::trunc);
  out << content;
  return path;
}

constexpr const char* kValidCsv =
    "id,label,meta:site,meta:age,feat:0,feat:1\n"
    "1,42.5,hospital_a,42.5,0.1,0.2\n"
    "2,63,hospital_b,63,0.4,0.5\n"
    "3,55,hospital_a,55,0.7,0.8\n";

const std::vector<MetaColumn> kCsvSchema = {{"site", MetaKind::categorical},
                                            {"age", MetaKind::numeric}};

}  // namespace

TEST_CASE("reveal contract: counted, one-shot, id-checked") {
  SourcePool pool = tiny_pool();
  CHECK(pool.size() == 3);
  CHECK(pool.reveal_count() == 0);
  CHECK(pool.unrevealed_count() == 3);

  const Revealed r = pool.reveal(2);
  CHECK(r.label == 63.0);
  CHECK(r.features == std::vector<double>{0.4, 0.5, 0.6});
  CHECK(pool.reveal_count() == 1);
  CHECK(pool.is_revealed(2));
  CHECK(!pool.is_revealed(1));

  CHECK_THROWS_AS(pool.reveal(2), std::logic_error);   // double reveal
  CHECK_THROWS_AS(pool.reveal(99), std::invalid_argument);
  CHECK(pool.reveal_count() == 1);

  pool.reveal(1);
  pool.reveal(3);
  CHECK(pool.reveal_count() == 3);
}

TEST_CASE("metadata reads are free and typed") {
  SourcePool pool = tiny_pool();
  CHECK(pool.meta_value(1, 0) == 0.0);
  CHECK(pool.meta_value(2, 0) == 1.0);
  CHECK(pool.meta_value(3, 1) == 55.0);
  CHECK(pool.format_meta(0, 1.0) == "hospital_b");
  CHECK(pool.format_meta(1, 55.0) == "55");
  CHECK(pool.reveal_count() == 0);  // none of the above cost a reveal
  CHECK(pool.column_index("age") == 1);
  CHECK_THROWS_AS(pool.column_index("weight"), std::invalid_argument);
  CHECK(pool.has_column("site"));
  CHECK(!pool.has_column("weight"));
  CHECK(pool.category_code(0, "hospital_a") == 0.0);
  CHECK(!pool.category_code(0, "hospital_z").has_value());
}

TEST_CASE("add_sample validates ids, widths, and category codes") {
  SourcePool pool = tiny_pool();
  CHECK_THROWS_AS(pool.add_sample(1, {0.0, 1.0}, {1, 2, 3}, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(pool.add_sample(9, {0.0}, {1, 2, 3}, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(pool.add_sample(9, {0.0, 1.0}, {1, 2}, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(pool.add_sample(9, {7.0, 1.0}, {1, 2, 3}, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(pool.add_sample(9, {0.5, 1.0}, {1, 2, 3}, 0.0), std::invalid_argument);
}

TEST_CASE("subset builds a fresh unrevealed pool") {
  SourcePool pool = tiny_pool();
  pool.reveal(1);
  const std::vector<SampleId> keep = {1, 3};
  SourcePool sub = pool.subset(keep);
  CHECK(sub.size() == 2);
  CHECK(sub.reveal_count() == 0);
  CHECK(!sub.is_revealed(1));  // reveal state reset in the subset
  CHECK(sub.meta_value(3, 1) == 55.0);
  sub.reveal(1);
  CHECK(pool.reveal_count() == 1);  // independent state

  const std::vector<SampleId> dup = {1, 1};
  CHECK_THROWS_AS(pool.subset(dup), std::invalid_argument);
  const std::vector<SampleId> missing = {42};
  CHECK_THROWS_AS(pool.subset(missing), std::invalid_argument);
}

TEST_CASE("csv loader accepts a valid file") {
  const auto path = write_temp_csv("mabs_pool_ok.csv", kValidCsv);
  SourcePool pool = load_pool_csv(path, kCsvSchema);
  CHECK(pool.size() == 3);
  CHECK(pool.feature_dim() == 2);
  CHECK(pool.reveal_count() == 0);
  CHECK(pool.meta_value(1, 0) == 0.0);  // hospital_a got code 0 (first seen)
  CHECK(pool.meta_value(2, 0) == 1.0);
  CHECK(pool.meta_value(2, 1) == 63.0);
  const Revealed r = pool.reveal(1);
  CHECK(r.label == 42.5);
  CHECK(r.features == std::vector<double>{0.1, 0.2});
}

TEST_CASE("csv loader errors name the problem, row, and column") {
  SUBCASE("missing label column") {
    const auto path = write_temp_csv("mabs_pool_nolabel.csv",
                                     "id,meta:site,meta:age,feat:0\n1,a,5,0.1\n");
    CHECK_THROWS_WITH_AS(load_pool_csv(path, kCsvSchema),
                         doctest::Contains("label column missing"), ConfigError);
  }
  SUBCASE("duplicate id") {
    const auto path = write_temp_csv("mabs_pool_dup.csv",
                                     "id,label,meta:site,meta:age,feat:0\n"
                                     "7,1,a,5,0.1\n7,2,b,6,0.2\n");
    CHECK_THROWS_WITH_AS(load_pool_csv(path, kCsvSchema),
                         doctest::Contains("duplicate id 7"), ConfigError);
  }
  SUBCASE("bad feature cell names row and column") {
    const auto path = write_temp_csv("mabs_pool_badfeat.csv",
                                     "id,label,meta:site,meta:age,feat:0\n"
                                     "1,1,a,5,zero\n");
    CHECK_THROWS_WITH_AS(load_pool_csv(path, kCsvSchema),
                         doctest::Contains("row 2: bad value 'zero' in column 'feat:0'"),
                         ConfigError);
  }
  SUBCASE("missing schema column") {
    const auto path = write_temp_csv("mabs_pool_nometa.csv",
                                     "id,label,meta:site,feat:0\n1,1,a,0.1\n");
    CHECK_THROWS_WITH_AS(load_pool_csv(path, kCsvSchema),
                         doctest::Contains("metadata column 'age' missing"), ConfigError);
  }
  SUBCASE("unexpected metadata column") {
    const auto path = write_temp_csv(
        "mabs_pool_extrameta.csv",
        "id,label,meta:site,meta:age,meta:zip,feat:0\n1,1,a,5,90210,0.1\n");
    CHECK_THROWS_WITH_AS(load_pool_csv(path, kCsvSchema),
                         doctest::Contains("unexpected metadata column 'zip'"), ConfigError);
  }
  SUBCASE("gap in feature columns") {
    const auto path = write_temp_csv("mabs_pool_featgap.csv",
                                     "id,label,meta:site,meta:age,feat:0,feat:2\n"
                                     "1,1,a,5,0.1,0.3\n");
    CHECK_THROWS_WITH_AS(load_pool_csv(path, kCsvSchema),
                         doctest::Contains("feature column 'feat:1' missing"), ConfigError);
  }
  SUBCASE("empty metadata cell is rejected") {
    const auto path = write_temp_csv("mabs_pool_emptymeta.csv",
                                     "id,label,meta:site,meta:age,feat:0\n"
                                     "1,1,,5,0.1\n");
    CHECK_THROWS_WITH_AS(load_pool_csv(path, kCsvSchema),
                         doctest::Contains("row 2: empty value in column 'meta:site'"),
                         ConfigError);
  }
  SUBCASE("multiple problems are all reported at once") {
    const auto path = write_temp_csv("mabs_pool_multi.csv",
                                     "id,label,meta:site,meta:age,feat:0\n"
                                     "1,one,a,5,0.1\n"
                                     "1,2,b,six,0.2\n");
    try {
      load_pool_csv(path, kCsvSchema);
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("row 2: bad label 'one'") != std::string::npos);
      CHECK(msg.find("row 3: duplicate id 1") != std::string::npos);
      CHECK(msg.find("row 3: bad value 'six'") != std::string::npos);
    }
  }
  SUBCASE("missing file") {
    CHECK_THROWS_WITH_AS(load_pool_csv("/nonexistent/nope.csv", kCsvSchema),
                         doctest::Contains("cannot open"), ConfigError);
  }
}

TEST_CASE("pool csv write/load round-trips bitwise") {
  SyntheticConfig cfg;
  cfg.feature_dim = 5;
  cfg.diagnosis_count = 2;
  cfg.datasets = {{"alpha", 20, 20, 80, 2.0, 0.0}, {"beta", 15, 30, 70, 1.0, 0.6}};
  SourcePool pool = generate_synthetic(cfg, 99);

  std::ostringstream first;
  write_pool_csv(pool, first);
  const auto path = write_temp_csv("mabs_pool_roundtrip.csv", first.str());
  SourcePool loaded = load_pool_csv(
      path, {{"dataset", MetaKind::categorical},
             {"sex", MetaKind::categorical},
             {"diagnosis", MetaKind::categorical},
             {"age", MetaKind::numeric}});

  CHECK(loaded.size() == pool.size());
  CHECK(loaded.feature_dim() == pool.feature_dim());
  std::ostringstream second;
  write_pool_csv(loaded, second);
  CHECK(first.str() == second.str());

  // Value-level spot check including exact feature bits. Categorical codes
  // are dictionary-order dependent (the loader assigns them by first
  // appearance), so compare the decoded strings, not the raw codes.
  for (SampleId id : pool.ids()) {
    for (std::size_t c = 0; c < 4; ++c)
      CHECK(loaded.format_meta(c, loaded.meta_value(id, c)) ==
            pool.format_meta(c, pool.meta_value(id, c)));
    const Revealed a = pool.reveal(id);
    const Revealed b = loaded.reveal(id);
    CHECK(a.label == b.label);
    CHECK(a.features == b.features);
  }
}

TEST_CASE("synthetic generator is deterministic and shaped by its config") {
  SyntheticConfig cfg;
  cfg.feature_dim = 4;
  cfg.diagnosis_count = 3;
  cfg.datasets = {{"d0", 30, 20, 50, 1.0, 0.0}, {"d1", 20, 40, 90, 3.0, 1.0}};

  SourcePool a = generate_synthetic(cfg, 7);
  SourcePool b = generate_synthetic(cfg, 7);
  SourcePool c = generate_synthetic(cfg, 8);

  std::ostringstream sa, sb, sc;
  write_pool_csv(a, sa);
  write_pool_csv(b, sb);
  write_pool_csv(c, sc);
  CHECK(sa.str() == sb.str());
  CHECK(sa.str() != sc.str());

  CHECK(a.size() == 50);
  CHECK(a.feature_dim() == 4);
  CHECK(a.categories(0) == std::vector<std::string>{"d0", "d1"});
  CHECK(a.categories(1) == std::vector<std::string>{"female", "male"});
  CHECK(a.categories(2) == std::vector<std::string>{"dx0", "dx1", "dx2"});

  const std::size_t age_col = a.column_index("age");
  const std::size_t ds_col = a.column_index("dataset");
  int in_d0 = 0;
  for (SampleId id : a.ids()) {
    const double age = a.meta_value(id, age_col);
    const double ds = a.meta_value(id, ds_col);
    if (ds == 0.0) {
      ++in_d0;
      CHECK(age >= 20.0);
      CHECK(age <= 50.0);
    } else {
      CHECK(age >= 40.0);
      CHECK(age <= 90.0);
    }
    const Revealed r = a.reveal(id);
    CHECK(r.label == age);  // age metadata mirrors the hidden label exactly
  }
  CHECK(in_d0 == 30);
}

TEST_CASE("synthetic generator reports every config problem at once") {
  SyntheticConfig cfg;
  cfg.feature_dim = 0;
  cfg.datasets = {{"x", 0, 50, 20, -1.0, 2.0}};
  try {
    generate_synthetic(cfg, 1);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("feature_dim") != std::string::npos);
    CHECK(msg.find("samples") != std::string::npos);
    CHECK(msg.find("age range") != std::string::npos);
    CHECK(msg.find("noise") != std::string::npos);
    CHECK(msg.find("distortion") != std::string::npos);
  }
}
