// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>

#include "editid/harness.hpp"
#include "editid/sweep.hpp"
#include "support.hpp"

using namespace editid;
namespace fs = std::filesystem;

namespace {

// Collects failed checks for one criterion.
struct Checker {
  std::vector<std::string> failures;
  void operator()(bool ok, const std::string& what) {
    if (!ok) failures.push_back(what);
  }
};

int failed = 0;

void criterion(int n, const std::string& title, double budget_s, const std::function<void(Checker&)>& body) {
  Checker check;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    body(check);
  } catch (const std::exception& e) {
    check.failures.push_back(std::string("exception: ") + e.what());
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (budget_s > 0 && secs > budget_s) {
    std::ostringstream os;
    os << "runtime " << secs << " s over budget " << budget_s << " s";
    check.failures.push_back(os.str());
  }
  const bool ok = check.failures.empty();
  if (!ok) ++failed;
  std::printf("%s criterion %d: %s (%.3f s)\n", ok ? "PASS" : "FAIL", n, title.c_str(), secs);
  for (const auto& f : check.failures) std::printf("    %s\n", f.c_str());
  std::fflush(stdout);
}

Real max_abs(const MatrixX& m) { return tsupport::max_abs(m); }

LayerFeatureSet random_layers(std::mt19937_64& g) {
  LayerFeatureSet l;
  l.per_layer = tsupport::random_matrix(g, 23, 16);
  return l;
}

}  // namespace

int main() {
  criterion(1, "schedule identity", 1.0, [](Checker& check) {
    std::mt19937_64 g(1);
    std::uniform_real_distribution<Real> u(0.0, 1.0);
    for (int i = 0; i < 1000; ++i) {
      const auto s = noise_schedule(TimePoint(u(g)));
      check(std::abs(s.alpha + s.sigma - 1.0) < 1e-12, "alpha + sigma != 1");
    }
    const auto a = noise_schedule(TimePoint(0.0)), b = noise_schedule(TimePoint(1.0));
    check(a.alpha == 1.0 && a.sigma == 0.0, "t = 0 endpoint");
    check(b.sigma == 1.0 && b.alpha < 1e-15, "t = 1 endpoint");
  });

  criterion(2, "euler correctness", 1.0, [](Checker& check) {
    std::mt19937_64 g(2);
    const MatrixX x = tsupport::random_matrix(g, 4, 6), v = tsupport::random_matrix(g, 4, 6);
    const auto constant = [&](const MatrixX&, TimePoint) { return v; };
    for (int steps : {1, 5, 20, 160})
      check(max_abs(euler_integrate<Real>(constant, x, steps) - (x + v)) < 1e-9, "constant field not exact");
    const auto linear = [](const MatrixX& s, TimePoint) { return s; };
    Real previous = 1e300;
    for (int steps : {5, 10, 20, 40, 80, 160}) {
      const Real err = max_abs(euler_integrate<Real>(linear, x, steps) - std::exp(1.0) * x);
      check(err < previous, "error did not shrink at " + std::to_string(steps) + " steps");
      previous = err;
    }
  });

  criterion(3, "five-slot constraint over 500 random pick lists", 1.0, [](Checker& check) {
    std::mt19937_64 g(3);
    std::uniform_int_distribution<int> len(1, 9), layer(1, 23), strat(0, 4);
    int accepted = 0, rejected = 0;
    for (int trial = 0; trial < 500; ++trial) {
      std::vector<int> picks(static_cast<std::size_t>(len(g)));
      for (auto& p : picks) p = layer(g);
      const int s = strat(g);
      const std::optional<ShiftStrategy> strategy =
          s == 4 ? std::nullopt : std::optional<ShiftStrategy>(static_cast<ShiftStrategy>(s));
      const std::size_t n = picks.size();
      const bool fits = !strategy ? n == 5
                        : (*strategy == ShiftStrategy::Padding || *strategy == ShiftStrategy::Interpolate)
                            ? n < 5
                            : n > 5;
      try {
        const auto sel = build_selection(picks, strategy);
        check(fits, "mismatched list accepted");
        check(sel.slots.size() == 5u, "selection without five slots");
        check(materialize_slots(random_layers(g), sel).slots.rows() == 5, "stack without five rows");
        ++accepted;
      } catch (const Error& e) {
        check(!fits, std::string("valid list rejected: ") + e.what());
        check(e.code() == ErrorCode::InvalidInput, "wrong error code");
        ++rejected;
      }
    }
    check(accepted > 0 && rejected > 0, "degenerate sample");
  });

  criterion(4, "residual fusion algebra over 100 random shapes", 1.0, [](Checker& check) {
    std::mt19937_64 g(4);
    std::uniform_int_distribution<int> dim(1, 16);
    using K = FusionMethod::Kind;
    for (int trial = 0; trial < 100; ++trial) {
      const int r = dim(g), c = dim(g);
      const MatrixX a = tsupport::random_matrix(g, r, c), b = tsupport::random_matrix(g, r, c);
      FusionMethod f;
      f.kind = K::Sum;
      check(max_abs(residual_fuse<Real>(a, MatrixX::Zero(r, c), f) - a) < 1e-6, "sum with zero");
      f.kind = K::Multiply;
      check(max_abs(residual_fuse<Real>(a, MatrixX::Ones(r, c), f) - a) < 1e-6, "multiply with ones");
      f.kind = K::Concat;
      check(max_abs(residual_fuse<Real>(a, a, f) - a) < 1e-6, "concat of equals");
      f.kind = K::Max;
      check(max_abs(residual_fuse<Real>(a, a, f) - a) < 1e-6, "max idempotence");
      f.kind = K::Weight;
      f.weights = std::make_pair(1.0, 0.0);
      check(max_abs(residual_fuse<Real>(a, b, f) - a) < 1e-6, "weight (1, 0)");
    }
  });

  criterion(5, "reweight transforms", 2.0, [](Checker& check) {
    for (int n = 1; n <= 64; ++n)
      for (int rows = 1; rows <= n; ++rows) {
        const MatrixX d = dct_rows<Real>(rows, n), f = partial_fourier_rows<Real>(rows, n);
        const MatrixX eye = MatrixX::Identity(rows, rows);
        check(max_abs(tsupport::bf_matmul(d, d.transpose()) - eye) < 1e-9, "dct rows not orthonormal");
        check(max_abs(tsupport::bf_matmul(f, f.transpose()) - eye) < 1e-9, "fourier rows not orthonormal");
      }
    ReweightMethod m;
    m.seed = 1234;
    check(reweight_matrix<Real>(m, 48) == reweight_matrix<Real>(m, 48), "seeded gaussian not reproducible");
  });

  criterion(6, "attention oracles", 1.0, [](Checker& check) {
    std::mt19937_64 g(6);
    VectorFieldSpec spec;
    const AttentionField<Real> field(spec);
    for (int tokens = 1; tokens <= 5; ++tokens) {
      const MatrixX x = tsupport::random_matrix(g, tokens, spec.dim);
      const MatrixX c = tsupport::random_matrix(g, tokens, spec.cond_dim);
      check(max_abs(field(x, TimePoint(0.4), c) - tsupport::bf_field(field, x, c)) < 1e-10, "field");
      const IDEmbedding id{tsupport::random_vector(g, 32)};
      const MappedStack m{tsupport::random_matrix(g, 5, 32)};
      const auto r = fuse_with_weights(id, m);
      const MatrixX expected = tsupport::bf_attention(id.values.transpose(), m.slots, m.slots);
      check(max_abs(r.feature.values.transpose() - expected) < 1e-10, "fuse");
      check(std::abs(r.weights.sum() - 1.0) < 1e-10, "fuse weights do not sum to 1");
    }
  });

  criterion(7, "training-free layering", 5.0, [](Checker& check) {
    const auto d = toy_descriptor(BackendKind::Generator);
    const auto gen = std::dynamic_pointer_cast<const ImageGenerator>(make_toy_backend(d));
    std::mt19937_64 g(7);
    GenerationRequest plain;
    plain.prompt = "a portrait of a person in a red hat";
    plain.seed = 17;
    const ImageBuffer reference = gen->generate(plain);

    IdConditioning empty{EditFeature{tsupport::random_vector(g, 32)}, {}};
    empty.integration.blocks = select_blocks(std::vector<BlockId>{});
    GenerationRequest with_empty = plain;
    with_empty.id = &empty;
    check(gen->generate(with_empty) == reference, "empty block set differs from plain sampling");

    IdConditioning zero{EditFeature{tsupport::random_vector(g, 32)}, {}};
    zero.integration.schedule.base = 0.0;
    GenerationRequest with_zero = plain;
    with_zero.id = &zero;
    check(max_abs_diff(gen->generate(with_zero), reference) < 1e-12, "strength 0 image");

    const MatrixX state = tsupport::random_matrix(g, 16, 32);
    for (int flat : {0, 6, 31, 56})
      check(max_abs(integrate_step<Real>(state, zero.edit.values, zero.integration, BlockId::from_flat(flat), 2,
                                         20) -
                    state) < 1e-12,
            "strength 0 step");

    IdConditioning live{zero.edit, {}};
    GenerationRequest with_live = plain;
    with_live.id = &live;
    check(max_abs_diff(gen->generate(with_live), reference) > 0.0, "the ID branch had no effect");
  });

  criterion(8, "FID oracle", 10.0, [](Checker& check) {
    std::mt19937_64 g(8);
    std::normal_distribution<Real> n(0.0, 1.0);
    const int count = 10000, dim = 4;
    const Real dist = 3.0;
    std::vector<VectorX> a(count), b(count);
    for (int i = 0; i < count; ++i) {
      a[i].resize(dim);
      b[i].resize(dim);
      for (int k = 0; k < dim; ++k) {
        a[i](k) = n(g);
        b[i](k) = n(g);
      }
      b[i] += VectorX::Constant(dim, dist / 2.0);  // |offset| = dist
    }
    check(fid(a, a).value < 1e-6, "identical sets");
    const Real v = fid(a, b).value;
    std::ostringstream os;
    os << "two Gaussians: " << v << " vs " << dist * dist;
    check(std::abs(v - dist * dist) / (dist * dist) < 0.02, os.str());
  });

  criterion(9, "metric fixed points", 2.0, [](Checker& check) {
    BackendRegistry reg;
    register_toy_backends(reg);
    const ToyFaceDetector det;
    const auto emb = reg.resolve_as<FaceEmbedder>(BackendKind::FaceEmbedder, "toy");
    const auto clip = reg.resolve_as<ImageEncoder>(BackendKind::GenericImageEncoder, "toy");
    const auto dino = reg.resolve_as<ImageEncoder>(BackendKind::FineImageEncoder, "toy");
    const auto text = reg.resolve_as<TextEncoder>(BackendKind::TextEncoder, "toy");
    const auto pose = reg.resolve_as<HeadPoseEstimator>(BackendKind::HeadPose, "toy");
    for (std::uint64_t s = 1; s <= 5; ++s) {
      const ImageBuffer im = draw_face(s);
      check(std::abs(facesim(im, im, det, *emb) - 1.0) < 1e-9, "facesim");
      check(std::abs(clip_i(im, im, *clip) - 1.0) < 1e-9, "clip_i");
      check(std::abs(dino_sim(im, im, *dino) - 1.0) < 1e-9, "dino");
      check(std::abs(fgis(im, im, det, *dino) - 1.0) < 1e-9, "fgis");
      const auto p = posediv(im, im, det, *pose);
      check(p.yaw == 0.0 && p.pitch == 0.0 && p.roll == 0.0, "posediv");
      check(landmarkdiff(im, im, det) == 0.0, "landmarkdiff on identical images");
    }
    const VectorX t = text->encode("a red barn");
    check(std::abs(cosine(t, t) - 1.0) < 1e-9, "clip_t");
    std::mt19937_64 g(9);
    std::uniform_real_distribution<Real> scale(0.2, 5.0), shift(-50, 50);
    for (int trial = 0; trial < 50; ++trial) {
      const Landmarks5 a = tsupport::random_matrix(g, 5, 2, 10.0);
      const Eigen::RowVector2d c = a.colwise().mean();
      const Landmarks5 b = ((a.rowwise() - c) * scale(g)).rowwise() + (c + Eigen::RowVector2d(shift(g), shift(g)));
      check(landmark_distance(a, a) == 0.0, "landmark distance of identical sets");
      check(landmark_distance(a, b) < 1e-12, "landmark distance under scale and translation");
    }
    using L = ExpressionLabel;
    std::vector<std::pair<L, L>> labels;
    for (int i = 0; i < 1000; ++i) labels.push_back({L::Neutral, i < 554 ? L::Happy : L::Neutral});
    check(exprdiv(labels) == 554.0 / 1000.0, "exprdiv 554/1000");
    labels.resize(7);
    check(exprdiv(labels) == 1.0, "exprdiv 7/7");
  });

  criterion(10, "end-to-end determinism and fault isolation", 60.0, [](Checker& check) {
    const auto root = tsupport::scratch_dir("acceptance-e2e");
    HarnessConfig cfg = tsupport::small_config(root);
    BackendRegistry reg;
    populate_registry(reg, cfg.backends);
    const auto first = run(cfg, reg);
    check(first.report.cases.size() == 6u, "expected 6 cases");
    for (const auto& c : first.report.cases)
      for (const auto& r : c.records) check(r.value.has_value(), "null " + r.metric + " in " + c.id);
    for (const auto& [key, agg] : first.report.aggregates) check(agg.nulls == 0 && agg.mean, "aggregate " + key);
    const std::string report_bytes = tsupport::read_text(root / "out" / "report.json");
    const auto second = run(cfg, reg);
    check(tsupport::read_text(root / "out" / "report.json") == report_bytes, "rerun report differs");
    check(canonical_json(canonical_manifest(first.manifest)) == canonical_json(canonical_manifest(second.manifest)),
          "rerun manifest differs");

    write_ppm(draw_face(1100, 72), root / "faces" / "face_02.ppm");
    cfg.output_dir = root / "out-fault";
    reg.add(toy_descriptor(BackendKind::LandmarkDetector, "blind"), std::make_shared<tsupport::BlindDetector>(72));
    cfg.backends.use[BackendKind::LandmarkDetector] = "blind";
    const auto faulty = run(cfg, reg).report;
    const std::set<std::string> face_metrics{"posediv_yaw", "posediv_pitch", "posediv_roll", "landmarkdiff",
                                             "exprdiv",     "facesim",       "fgis"};
    int nulls = 0;
    for (std::size_t i = 0; i < faulty.cases.size(); ++i) {
      const auto& c = faulty.cases[i];
      const bool hit = c.image_name == "face_02.ppm";
      for (const auto& r : c.records) {
        const bool expect_null = hit && face_metrics.count(r.metric);
        if (!r.value) ++nulls;
        check(r.value.has_value() != expect_null, "null pattern at " + c.id + " " + r.metric);
        if (expect_null) check(r.error_code == "face-not-found", "error code at " + c.id + " " + r.metric);
        if (!hit) check(r.value == first.report.cases[i].find(r.metric)->value, "unaffected case changed " + c.id);
      }
    }
    check(nulls == 2 * static_cast<int>(face_metrics.size()), "null count " + std::to_string(nulls));
  });

  criterion(11, "selection sweep shape and tradeoff data", 90.0, [](Checker& check) {
    const auto root = tsupport::scratch_dir("acceptance-sweep");
    HarnessConfig cfg = tsupport::small_config(root);
    BackendRegistry reg;
    populate_registry(reg, cfg.backends);
    std::vector<LayerSelection> sels;
    for (const char* s : {"[4,-,-,-,-]", "[4,8,-,-,-]", "[4,12,-,-,-]", "[4,16,-,-,-]", "[0,12,-,-,-]",
                          "[0,16,-,-,-]"})
      sels.push_back(parse_selection(s));
    const auto table = sweep_selections(cfg, reg, sels);
    check(table.rows.size() == 6u, "rows: " + std::to_string(table.rows.size()));
    check(table.columns == selection_sweep_columns(), "column set");
    for (const auto& row : table.rows)
      for (const auto& [title, key] : table.columns) check(row.aggregates.count(key) > 0, row.label + " " + key);
    HarnessConfig base_cfg = cfg;
    base_cfg.output_dir = root / "baseline";
    const auto baseline = run(base_cfg, reg).report;
    const auto points = plot_tradeoff(baseline, table);
    check(points.size() == 6u, "tradeoff tuples: " + std::to_string(points.size()));
    for (const auto& p : points)
      check(p.d_facesim && p.d_yaw && p.d_pitch && p.d_roll, "incomplete tuple " + p.label);
  });

  criterion(12, "report exposes the reference columns (values not gated)", 0.0, [](Checker& check) {
    std::set<std::string> titles;
    for (const auto& [title, key] : report_columns()) titles.insert(title);
    for (const char* t : {"FID", "Aesthetic", "Image Quality", "Posediv Yaw", "Posediv Pitch", "Posediv Roll",
                          "Landmarkdiff", "Exprdiv", "Facesim", "ClipI", "ClipT", "Dino", "Fgis"})
      check(titles.count(t) > 0, std::string("missing column ") + t);
    std::printf("    reference row: Facesim 0.714, Posediv 11.81/6.722/10.60, Landmarkdiff 0.082, "
                "Exprdiv 0.554, ClipT 0.249, ClipI 0.769\n");
  });

  std::printf("%s: %d criteria failed\n", failed ? "FAIL" : "PASS", failed);
  return failed ? 1 : 0;
}
