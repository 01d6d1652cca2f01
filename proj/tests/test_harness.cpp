#include <doctest.h>

#include <cstdlib>
#include <set>

#include "editid/harness.hpp"
#include "editid/sweep.hpp"
#include "support.hpp"

using namespace editid;
namespace fs = std::filesystem;

TEST_CASE("load_group ordering, warnings and errors") {
  const auto dir = tsupport::scratch_dir("group");
  for (const char* n : {"b.ppm", "a.ppm", "c.ppm"}) write_ppm(draw_face(1, 16), dir / "imgs" / n);
  tsupport::write_text(dir / "imgs" / "notes.txt", "ignored");
  std::vector<std::string> warnings;
  const auto g = load_group({"unsplash", dir / "imgs", 4, {{"a.ppm", Gender::Woman}}}, &warnings);
  REQUIRE(g.images.size() == 3u);
  CHECK(g.images[0].name == "a.ppm");
  CHECK(g.images[2].name == "c.ppm");
  CHECK(g.images[0].gender == Gender::Woman);
  CHECK(g.images[1].gender == Gender::Unknown);
  REQUIRE(warnings.size() == 1u);
  CHECK(warnings[0].find("1 missing") != std::string::npos);

  warnings.clear();
  load_group({"unsplash", dir / "imgs", 3, {}}, &warnings);
  CHECK(warnings.empty());

  fs::create_directories(dir / "empty");
  try {
    load_group({"x", dir / "empty", {}, {}});
    FAIL("expected empty input");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EmptyInput);
  }
  tsupport::write_text(dir / "broken" / "x.ppm", "garbage");
  tsupport::write_text(dir / "broken" / "y.ppm", "garbage");
  try {
    load_group({"x", dir / "broken", {}, {}});
    FAIL("expected io error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Io);
    CHECK(std::string(e.what()).find("x.ppm") != std::string::npos);
    CHECK(std::string(e.what()).find("y.ppm") != std::string::npos);
  }
  CHECK_THROWS_AS(load_group({"x", dir / "nope", {}, {}}), Error);
}

TEST_CASE("prompts and gender substitution") {
  const auto set = parse_prompts("# c\n\nPortrait, a [person] wearing a spacesuit\nA red barn\n", "short");
  REQUIRE(set.records.size() == 2u);
  CHECK(set.records[0].id == 1);
  CHECK(set.records[0].gendered);
  CHECK_FALSE(set.records[1].gendered);
  CHECK(substitute_gender(set.records[0], Gender::Woman) == "Portrait, a woman wearing a spacesuit");
  CHECK(substitute_gender(set.records[0], Gender::Man) == "Portrait, a man wearing a spacesuit");
  CHECK(substitute_gender(set.records[0], Gender::Unknown) == "Portrait, a person wearing a spacesuit");
  CHECK(substitute_gender(set.records[1], Gender::Woman) == "A red barn");
  CHECK_THROWS_AS(substitute_gender(PromptRecord{1, "no placeholder", true}, Gender::Man), Error);
  CHECK(parse_gender("woman") == Gender::Woman);
  CHECK_THROWS_AS(parse_gender("robot"), Error);

  const auto dir = tsupport::scratch_dir("prompts");
  tsupport::write_text(dir / "p.txt", "one\ntwo\n");
  std::vector<std::string> warnings;
  CHECK(load_prompts(dir / "p.txt", "manual", 80, &warnings).records.size() == 2u);
  CHECK(warnings.size() == 1u);
}

TEST_CASE("pairing cardinality and errors") {
  const auto make_group = [](const std::string& name, int n) {
    LoadedGroup g{name, {}};
    for (int i = 0; i < n; ++i) g.images.push_back({"img" + std::to_string(i), {}, {}, Gender::Unknown});
    return g;
  };
  const auto make_set = [](const std::string& name, int n) {
    PromptSet s{name, {}, {}};
    for (int i = 0; i < n; ++i) s.records.push_back({i + 1, "p" + std::to_string(i), false});
    return s;
  };
  const std::vector<LoadedGroup> groups{make_group("unsplash", 49), make_group("chineseid", 100),
                                        make_group("generateid", 100)};
  const std::vector<PromptSet> sets{make_set("short", 20), make_set("editable-long", 41), make_set("manual", 80)};
  const auto single = pair(groups, sets, {{"chineseid", "editable-long"}}, 1);
  CHECK(single.size() == 4100u);
  const auto all = pair(groups, sets, default_pairing(), 1);
  CHECK(all.size() == 49u * 20 + 100u * 41 + 100u * 80);
  std::set<std::string> pairings, ids;
  for (const auto& c : all) {
    pairings.insert(c.pairing);
    ids.insert(c.id);
  }
  CHECK(pairings.size() == 3u);
  CHECK(ids.size() == all.size());
  CHECK(all.front().seed == case_seed(1, all.front().image_name, all.front().prompt_id));
  CHECK(case_seed(1, "a", 1) != case_seed(1, "a", 2));
  CHECK(case_seed(1, "a", 1) != case_seed(2, "a", 1));

  CHECK_THROWS_AS(pair(groups, sets, {{"unsplash", "nope"}}, 1), Error);
  CHECK_THROWS_AS(pair(groups, sets, {{"nope", "short"}}, 1), Error);
  try {
    pair(groups, {make_set("short", 0)}, {{"unsplash", "short"}}, 1);
    FAIL("expected empty input");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EmptyInput);
  }
}

TEST_CASE("config parsing is strict and resolves paths") {
  const fs::path base = "/data/cfg";
  const auto cfg = parse_config(
      {{"seed", 5},
       {"output_dir", "out"},
       {"feature_branch", {{"picks", {4, 8}}, {"strategy", "padding"}, {"mask", {{"zero_slots", {2}}}}}},
       {"integration",
        {{"blocks", {"dual:0", "single:3"}},
         {"fusion", {{"method", "weight"}, {"weights", {0.7, 0.3}}}},
         {"schedule", {{"kind", "early-boost"}, {"boost", 0.5}, {"boost_until_fraction", 0.25}}}}},
       {"datasets", {{{"name", "g"}, {"dir", "imgs"}}}},
       {"prompts", {{{"name", "p"}, {"file", "/abs/p.txt"}}}},
       {"metrics", {{"enabled", {"facesim", "posediv"}}, {"landmark_normalization", "shared-max"}}}},
      base);
  CHECK(cfg.seed == 5u);
  CHECK(cfg.output_dir == base / "out");
  CHECK(cfg.datasets[0].image_dir == base / "imgs");
  CHECK(cfg.prompts[0].file == "/abs/p.txt");
  CHECK(cfg.feature_branch.selection.strategy == ShiftStrategy::Padding);
  CHECK(cfg.feature_branch.mask.zero_slots == std::set<int>{2});
  CHECK(cfg.integration.blocks.selected.size() == 2u);
  CHECK(cfg.integration.fusion.weights->first == 0.7);
  CHECK(cfg.integration.schedule.kind == StrengthSchedule::Kind::EarlyBoost);
  CHECK(cfg.metrics.on("facesim"));
  CHECK_FALSE(cfg.metrics.on("fid"));
  CHECK(cfg.metrics.landmark_normalization == LandmarkNormalization::SharedMax);
  CHECK(cfg.pairing.size() == 3u);

  CHECK_THROWS_AS(parse_config({{"unknown", 1}}), Error);
  CHECK_THROWS_AS(parse_config({{"sampler", {{"stepz", 3}}}}), Error);
  CHECK_THROWS_AS(parse_config({{"sampler", {{"name", "dpm"}}}}), Error);
  CHECK_THROWS_AS(parse_config({{"metrics", {{"enabled", {"lpips"}}}}}), Error);
  CHECK_THROWS_AS(parse_config({{"feature_branch", {{"selection", "4,8"}}}}), Error);
  CHECK_THROWS_AS(parse_config({{"integration", {{"blocks", 58}}}}), Error);
  CHECK_THROWS_AS(parse_config({{"integration", {{"fusion", {{"method", "weight"}}}}}}), Error);
  CHECK_THROWS_AS(parse_config({{"backends", {{"use", {{"face-painter", "x"}}}}}}), Error);
}

TEST_CASE("config hash, snapshot and env overrides") {
  HarnessConfig a;
  HarnessConfig b = a;
  b.output_dir = "elsewhere";
  b.workers = 8;
  CHECK(config_hash(a) == config_hash(b));
  b.seed = 1;
  CHECK(config_hash(a) != config_hash(b));
  CHECK(config_hash(a).size() == 16u);
  const auto snap = to_json(a);
  const auto back = parse_config(snap);
  CHECK(config_hash(back) == config_hash(a));

  ::setenv("EDITID_OUTPUT_DIR", "/tmp/x", 1);
  ::setenv("EDITID_WORKERS", "3", 1);
  apply_env_overrides(a);
  CHECK(a.output_dir == "/tmp/x");
  CHECK(a.workers == 3);
  ::setenv("EDITID_WORKERS", "zero", 1);
  CHECK_THROWS_AS(apply_env_overrides(a), Error);
  ::unsetenv("EDITID_OUTPUT_DIR");
  ::unsetenv("EDITID_WORKERS");
}

TEST_CASE("canonical json") {
  const nlohmann::json j = {{"b", 0.1}, {"a", {1, 2}}, {"c", std::nan("")}};
  const std::string s = canonical_json(j);
  CHECK(s.find("\"a\"") < s.find("\"b\""));
  CHECK(s.find("0.10000000000000001") != std::string::npos);
  CHECK(s.find("null") != std::string::npos);
  CHECK(canonical_json(nlohmann::json::parse(s)) == s);
}

namespace {

Real recomputed_mean(const MetricReport& r, const std::string& metric) {
  Real sum = 0;
  int n = 0;
  for (const auto& c : r.cases)
    for (const auto& rec : c.records)
      if (rec.metric == metric && rec.value) {
        sum += *rec.value;
        ++n;
      }
  return n ? sum / n : std::nan("");
}

}  // namespace

TEST_CASE("toy run end to end") {
  const auto root = tsupport::scratch_dir("run");
  HarnessConfig cfg = tsupport::small_config(root);
  BackendRegistry reg;
  populate_registry(reg, cfg.backends);
  const auto res = run(cfg, reg);
  const auto& r = res.report;
  REQUIRE(r.cases.size() == 6u);
  for (const auto& [name, agg] : r.aggregates) {
    CHECK_MESSAGE(agg.nulls == 0, name);
    REQUIRE(agg.mean);
    if (name != "fid") CHECK(*agg.mean == doctest::Approx(recomputed_mean(r, name)).epsilon(1e-12));
  }
  for (const auto& [title, key] : report_columns()) CHECK_MESSAGE(r.aggregates.count(key), key);
  CHECK(r.cases[0].prompt == "Portrait, a woman wearing a spacesuit, smiling");
  CHECK(r.cases[2].prompt == "Portrait, a person wearing a spacesuit, smiling");
  for (const auto& c : r.cases) {
    CHECK(c.id_branch == "ok");
    CHECK(fs::exists(root / "out" / c.with_id_path));
    CHECK(fs::exists(root / "out" / c.without_id_path));
    CHECK(read_ppm(root / "out" / c.with_id_path) != read_ppm(root / "out" / c.without_id_path));
  }
  for (const char* f : {"report.json", "report.csv", "report.txt", "manifest.json"})
    CHECK(fs::exists(root / "out" / f));

  // CSV round trip.
  const auto csv = parse_report_csv(tsupport::read_text(root / "out" / "report.csv"));
  for (const auto& [title, key] : report_columns()) {
    REQUIRE(csv.at(title));
    CHECK(*csv.at(title) == *r.aggregates.at(key).mean);
  }

  // Rerun: byte-identical report, equal canonical manifest.
  const std::string first = tsupport::read_text(root / "out" / "report.json");
  cfg.workers = 3;
  const auto again = run(cfg, reg);
  CHECK(tsupport::read_text(root / "out" / "report.json") == first);
  nlohmann::json m1 = canonical_manifest(res.manifest), m2 = canonical_manifest(again.manifest);
  m1.erase("workers");
  m2.erase("workers");
  m1["config"].erase("workers");
  m2["config"].erase("workers");
  CHECK(canonical_json(m1) == canonical_json(m2));

  // report() recomputes from the stored records.
  const auto re = report(root / "out" / "manifest.json");
  CHECK(canonical_json(to_json(re)) == first);
}

TEST_CASE("report of an empty run is an error") {
  const auto dir = tsupport::scratch_dir("empty-report");
  tsupport::write_text(dir / "manifest.json", R"({"report": "report.json"})");
  tsupport::write_text(dir / "report.json", R"({"config_hash": "0", "cases": []})");
  try {
    report(dir / "manifest.json");
    FAIL("expected empty input");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EmptyInput);
  }
  CHECK_THROWS_AS(aggregate("0", {}), Error);
}

TEST_CASE("fault injection isolates the failing image") {
  const auto root = tsupport::scratch_dir("fault");
  HarnessConfig cfg = tsupport::small_config(root);
  BackendRegistry reg;
  populate_registry(reg, cfg.backends);
  const auto clean = run(cfg, reg).report;

  write_ppm(draw_face(1100, 72), root / "faces" / "face_02.ppm");
  cfg.output_dir = root / "out-fault";
  reg.add(toy_descriptor(BackendKind::LandmarkDetector, "blind"), std::make_shared<tsupport::BlindDetector>(72));
  cfg.backends.use[BackendKind::LandmarkDetector] = "blind";
  const auto faulty = run(cfg, reg).report;
  REQUIRE(faulty.cases.size() == 6u);
  const std::set<std::string> face_metrics{"posediv_yaw", "posediv_pitch", "posediv_roll", "landmarkdiff",
                                           "exprdiv",     "facesim",       "fgis"};
  for (std::size_t i = 0; i < faulty.cases.size(); ++i) {
    const auto& c = faulty.cases[i];
    const bool hit = c.image_name == "face_02.ppm";
    CHECK(c.id_branch == "ok");
    for (const auto& rec : c.records) {
      const bool expect_null = hit && face_metrics.count(rec.metric);
      CHECK_MESSAGE(rec.value.has_value() == !expect_null, (c.id + " " + rec.metric));
      if (expect_null) CHECK(rec.error_code == "face-not-found");
      if (!hit) CHECK(rec.value == clean.cases[i].find(rec.metric)->value);
    }
  }
  CHECK(faulty.aggregates.at("facesim").nulls == 2);
  CHECK(faulty.aggregates.at("facesim").count == 4);
  CHECK(faulty.aggregates.at("clip_t").nulls == 0);
}

TEST_CASE("generation detector failure bypasses the ID branch") {
  const auto root = tsupport::scratch_dir("gen-fault");
  HarnessConfig cfg = tsupport::small_config(root, 1);
  BackendRegistry reg;
  populate_registry(reg, cfg.backends);
  reg.add(toy_descriptor(BackendKind::FaceDetector, "none"), std::make_shared<tsupport::NoFaceDetector>());
  cfg.backends.use[BackendKind::FaceDetector] = "none";
  const auto r = run(cfg, reg).report;
  for (const auto& c : r.cases) {
    CHECK(c.id_branch == "face-not-found");
    CHECK(read_ppm(root / "out" / c.with_id_path) == read_ppm(root / "out" / c.without_id_path));
    CHECK(c.find("clip_i")->value == doctest::Approx(1.0));
  }
}

TEST_CASE("fully masked branch degrades to plain generation") {
  const auto root = tsupport::scratch_dir("masked");
  HarnessConfig cfg = tsupport::small_config(root, 1);
  cfg.feature_branch.mask.zero_face = cfg.feature_branch.mask.zero_cls = cfg.feature_branch.mask.zero_local = true;
  BackendRegistry reg;
  populate_registry(reg, cfg.backends);
  for (const auto& c : run(cfg, reg).report.cases) {
    CHECK(c.id_branch == "disabled");
    CHECK(read_ppm(root / "out" / c.with_id_path) == read_ppm(root / "out" / c.without_id_path));
  }
}

TEST_CASE("run rejects configs it cannot satisfy") {
  const auto root = tsupport::scratch_dir("bad-run");
  HarnessConfig cfg = tsupport::small_config(root, 1);
  BackendRegistry reg;
  populate_registry(reg, cfg.backends);
  HarnessConfig deep = cfg;
  deep.feature_branch.selection = parse_selection("4,8,12,16,30");
  CHECK_THROWS_AS(run(deep, reg), Error);
  HarnessConfig missing = cfg;
  missing.backends.use[BackendKind::Generator] = "flux";
  try {
    run(missing, reg);
    FAIL("expected not-found");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NotFound);
  }
}

TEST_CASE("selection sweep: rows, dedup and tradeoff") {
  const auto root = tsupport::scratch_dir("sweep");
  HarnessConfig cfg = tsupport::small_config(root, 2);
  BackendRegistry reg;
  populate_registry(reg, cfg.backends);
  tsupport::write_text(root / "sel.txt", "# rows\n[4,-,-,-,-]\n[4,8,-,-,-]\n\n[4,8,-,-,-]\n4,14,16,18,20\n");
  const auto sels = load_selection_file(root / "sel.txt");
  CHECK(sels.size() == 4u);
  const auto t = sweep_selections(cfg, reg, sels);
  CHECK(t.rows.size() == 3u);
  CHECK(t.notices.size() == 1u);
  CHECK(t.rows[0].label == "[4,-,-,-,-]");
  CHECK(t.columns == selection_sweep_columns());
  CHECK(fs::exists(root / "out" / "sweep-selections" / "sweep.csv"));

  // A single-selection sweep row equals a plain run with that selection.
  HarnessConfig plain = cfg;
  plain.feature_branch.selection = parse_selection("4,14,16,18,20");
  plain.output_dir = root / "plain";
  const auto base = run(plain, reg).report;
  CHECK(t.rows[2].config_hash == base.config_hash);
  for (const auto& [key, agg] : t.rows[2].aggregates) CHECK(agg.mean == base.aggregates.at(key).mean);

  const auto pts = plot_tradeoff(base, t);
  REQUIRE(pts.size() == 3u);
  CHECK(*pts[2].d_facesim == 0.0);
  CHECK(*pts[0].d_facesim == *t.rows[0].aggregates.at("facesim").mean - *base.aggregates.at("facesim").mean);
  const auto csv = render_tradeoff_csv(pts, base.config_hash);
  CHECK(csv.rfind("# baseline " + base.config_hash, 0) == 0);
  CHECK(sweep_from_json(to_json(t)).rows.size() == 3u);

  tsupport::write_text(root / "bad.txt", "4,8\n");
  try {
    load_selection_file(root / "bad.txt");
    FAIL("expected config error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find(":1:") != std::string::npos);
  }
  CHECK_THROWS_AS(sweep_selections(cfg, reg, {}), Error);
}

TEST_CASE("fusion sweep: six methods, errors") {
  const auto root = tsupport::scratch_dir("fusion-sweep");
  HarnessConfig cfg = tsupport::small_config(root, 1);
  BackendRegistry reg;
  populate_registry(reg, cfg.backends);
  const auto combos = default_fusion_combos(cfg.integration.reweight);
  REQUIRE(combos.size() == 6u);
  const auto t = sweep_fusion(cfg, reg, combos);
  CHECK(t.rows.size() == 6u);
  std::set<std::string> labels, hashes;
  for (const auto& r : t.rows) {
    labels.insert(r.label);
    hashes.insert(r.config_hash);
  }
  CHECK(labels.size() == 6u);
  CHECK(hashes.size() == 6u);
  CHECK_THROWS_AS(sweep_fusion(cfg, reg, {}), Error);
  CHECK_THROWS_AS(load_fusion_combos(nlohmann::json::parse(R"([{"fusion": {"method": "weight"}}])")), Error);
  const auto loaded = load_fusion_combos(nlohmann::json::parse(
      R"([{"fusion": {"method": "sum"}, "reweight": {"method": "dct", "target_dim": 16}}])"));
  CHECK(loaded.at(0).reweight.kind == ReweightMethod::Kind::Dct);
}
