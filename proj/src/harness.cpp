#include "editid/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <ctime>
#include <exception>
#include <fstream>
#include <mutex>
#include <thread>

#include "editid/metrics.hpp"
#include "editid/plugin.hpp"
#include "editid/toy_backends.hpp"

namespace editid {

using nlohmann::json;

void populate_registry(BackendRegistry& registry, const BackendsConfig& cfg) {
  register_toy_backends(registry, "toy", cfg.toy_seed);
  register_manifest(registry, cfg.manifest);
}

RunBackends RunBackends::resolve(const BackendRegistry& registry, const BackendsConfig& cfg) {
  const auto get = [&](BackendKind k) { return registry.resolve(k, cfg.name_for(k)); };
  RunBackends b;
  b.face_detector = get(BackendKind::FaceDetector);
  b.face_embedder = get(BackendKind::FaceEmbedder);
  b.layered_encoder = get(BackendKind::LayeredImageEncoder);
  b.generator = get(BackendKind::Generator);
  b.metric_detector = get(BackendKind::LandmarkDetector);
  b.text_encoder = get(BackendKind::TextEncoder);
  b.image_encoder = get(BackendKind::GenericImageEncoder);
  b.fine_encoder = get(BackendKind::FineImageEncoder);
  b.head_pose = get(BackendKind::HeadPose);
  b.expression = get(BackendKind::ExpressionClassifier);
  b.statistics = get(BackendKind::StatisticFeatureExtractor);
  b.aesthetic = get(BackendKind::AestheticScorer);
  b.quality = get(BackendKind::QualityScorer);
  if (b.text_encoder.descriptor->dim("embedding") != b.image_encoder.descriptor->dim("embedding"))
    throw Error(ErrorCode::Config, "text and image encoders must share an embedding width");
  return b;
}

std::vector<const BackendDescriptor*> RunBackends::descriptors() const {
  std::vector<const BackendDescriptor*> out;
  for (const auto* h : {&face_detector, &face_embedder, &layered_encoder, &generator, &metric_detector,
                        &text_encoder, &image_encoder, &fine_encoder, &head_pose, &expression, &statistics,
                        &aesthetic, &quality})
    out.push_back(h->descriptor.get());
  return out;
}

int RunBackends::concurrency_limit() const {
  int limit = 0;
  for (const auto* d : descriptors())
    if (d->max_concurrency > 0) limit = limit == 0 ? d->max_concurrency : std::min(limit, d->max_concurrency);
  return limit;
}

std::optional<EditFeature> build_edit_feature(const ImageBuffer& id_image, const RunBackends& b,
                                              const FeatureBranchConfig& cfg) {
  if (cfg.mask.disables_branch()) return std::nullopt;
  const FaceCrop crop = detect_align_segment(id_image, *b.face_detector.as<FaceDetector>());
  const LayeredEncoding enc = b.layered_encoder.as<LayeredImageEncoder>()->encode(crop.image);
  const GlobalFeature global = extract_global(crop, b.face_embedder, enc, *b.layered_encoder.descriptor, cfg.mask);
  const LayerFeatureSet layers = pool_layers(enc);
  const auto& desc = *b.layered_encoder.descriptor;
  if (layers.layer_count() != desc.layer_count || layers.dim() != desc.dim("layer"))
    throw Error(ErrorCode::ShapeMismatch, "layered encoder output does not match its descriptor");
  const LocalFeatureStack stack = apply_ablation(materialize_slots(layers, cfg.selection), cfg.mask);

  FusionNetworkSpec spec;
  spec.id_seed = cfg.id_seed;
  spec.map_seed = cfg.map_seed;
  spec.global_dim = static_cast<int>(global.dim());
  spec.local_dim = layers.dim();
  spec.hidden = cfg.hidden;
  spec.id_dim = cfg.id_dim;
  return fuse(embed_id(global, spec), map_slots(stack, spec));
}

GeneratedPair generate_pair(const ImageBuffer& id_image, const std::string& prompt, std::uint64_t seed,
                            const RunBackends& b, const HarnessConfig& cfg) {
  const auto gen = b.generator.as<ImageGenerator>();
  GenerationRequest req;
  req.prompt = prompt;
  req.seed = seed;
  req.sampler = cfg.sampler;
  req.sampler.seed = seed;

  GeneratedPair out;
  out.without_id = gen->generate(req);
  std::optional<EditFeature> edit;
  try {
    edit = build_edit_feature(id_image, b, cfg.feature_branch);
    if (!edit) out.id_branch = "disabled";
  } catch (const Error& e) {
    if (e.code() != ErrorCode::FaceNotFound) throw;
    out.id_branch = std::string(to_string(e.code()));
  }
  if (edit) {
    IdConditioning id{*edit, cfg.integration};
    id.integration.fusion.seed = mix_seed(cfg.integration.fusion.seed, seed);
    req.id = &id;
    out.with_id = gen->generate(req);
  } else {
    out.with_id = out.without_id;
  }
  return out;
}

namespace {

std::string error_code_of(const std::exception& e) {
  if (const auto* err = dynamic_cast<const Error*>(&e)) return std::string(to_string(err->code()));
  return "internal";
}

void add_null(CaseResult& out, const std::string& metric, const std::string& code) {
  out.records.push_back({metric, std::nullopt, std::nullopt, code});
}

// Runs fn and appends its records; on failure appends nulls for `names`.
template <typename Fn>
void guarded(CaseResult& out, std::initializer_list<const char*> names, Fn&& fn) {
  try {
    fn();
  } catch (const std::exception& e) {
    const auto code = error_code_of(e);
    for (const char* n : names) add_null(out, n, code);
  }
}

}  // namespace

void score_case(CaseResult& out, const ImageBuffer& id_image, const GeneratedPair& images, const RunBackends& b,
                const MetricsConfig& m) {
  const ImageBuffer& gen = images.with_id;
  const auto& det = *b.metric_detector.as<FaceDetector>();
  const auto put = [&](const char* name, Real v, std::optional<Real> raw = std::nullopt) {
    out.records.push_back({name, v, raw, std::nullopt});
  };

  if (m.on("aesthetic"))
    guarded(out, {"aesthetic"}, [&] {
      const auto s = aesthetic(gen, *b.aesthetic.as<Scorer>());
      put("aesthetic", s.value, s.raw);
    });
  if (m.on("image_quality"))
    guarded(out, {"image_quality"}, [&] {
      const auto s = imaging_quality(gen, *b.quality.as<Scorer>());
      put("image_quality", s.value, s.raw);
    });
  if (m.on("posediv"))
    guarded(out, {"posediv_yaw", "posediv_pitch", "posediv_roll"}, [&] {
      const auto d = posediv(id_image, gen, det, *b.head_pose.as<HeadPoseEstimator>());
      put("posediv_yaw", d.yaw);
      put("posediv_pitch", d.pitch);
      put("posediv_roll", d.roll);
    });
  if (m.on("landmarkdiff"))
    guarded(out, {"landmarkdiff"}, [&] { put("landmarkdiff", landmarkdiff(id_image, gen, det, m.landmark_normalization)); });
  if (m.on("exprdiv"))
    guarded(out, {"exprdiv"}, [&] {
      const auto p = expression_pair(id_image, gen, det, *b.expression.as<ExpressionClassifier>());
      out.expressions = std::make_pair(std::string(to_string(p.id)), std::string(to_string(p.generated)));
      // Per-case indicator; its mean over cases is exprdiv.
      put("exprdiv", p.id != p.generated ? 1.0 : 0.0);
    });
  if (m.on("facesim"))
    guarded(out, {"facesim"}, [&] { put("facesim", facesim(id_image, gen, det, *b.face_embedder.as<FaceEmbedder>())); });
  if (m.on("clip_i"))
    guarded(out, {"clip_i"}, [&] { put("clip_i", clip_i(gen, images.without_id, *b.image_encoder.as<ImageEncoder>())); });
  if (m.on("clip_t"))
    guarded(out, {"clip_t"}, [&] {
      put("clip_t", clip_t(out.prompt, gen, *b.text_encoder.as<TextEncoder>(), *b.image_encoder.as<ImageEncoder>()));
    });
  if (m.on("dino"))
    guarded(out, {"dino"}, [&] { put("dino", dino_sim(id_image, gen, *b.fine_encoder.as<ImageEncoder>())); });
  if (m.on("fgis"))
    guarded(out, {"fgis"}, [&] { put("fgis", fgis(id_image, gen, det, *b.fine_encoder.as<ImageEncoder>())); });
  if (m.on("fid")) {
    try {
      const auto enc = b.statistics.as<ImageEncoder>();
      out.stats_with_id = enc->encode(gen);
      out.stats_without_id = enc->encode(images.without_id);
    } catch (const std::exception&) {
      out.stats_with_id.reset();
      out.stats_without_id.reset();
    }
  }
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + tmp);
    out << content;
    if (!out) throw Error(ErrorCode::Io, "write failed for " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

namespace {

std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

const char* metric_names_for_failure[] = {"aesthetic",    "image_quality", "posediv_yaw", "posediv_pitch",
                                          "posediv_roll", "landmarkdiff",  "exprdiv",     "facesim",
                                          "clip_i",       "clip_t",        "dino",        "fgis"};

bool enabled_record(const MetricsConfig& m, std::string_view record) {
  if (record.rfind("posediv", 0) == 0) return m.on("posediv");
  return m.on(std::string(record));
}

void write_reports(const std::filesystem::path& dir, const MetricReport& r) {
  write_file_atomic(dir / "report.json", canonical_json(to_json(r)));
  write_file_atomic(dir / "report.csv", render_csv(r));
  write_file_atomic(dir / "report.txt", render_text(r));
}

void check_selection_layers(const LayerSelection& sel, const BackendDescriptor& encoder) {
  const auto too_deep = [&](int layer) { return layer > encoder.layer_count; };
  for (const auto& s : sel.slots)
    if (s.kind == SlotPick::Kind::Layer && too_deep(s.layer))
      throw Error(ErrorCode::Config, "selection " + sel.label + " asks for layer " + std::to_string(s.layer) +
                                         " but the encoder has " + std::to_string(encoder.layer_count));
  for (int p : sel.raw_picks)
    if (too_deep(p))
      throw Error(ErrorCode::Config, "selection " + sel.label + " asks for layer " + std::to_string(p) +
                                         " but the encoder has " + std::to_string(encoder.layer_count));
}

}  // namespace

RunResult run(const HarnessConfig& cfg, const BackendRegistry& registry) {
  RunResult res;
  res.run_dir = cfg.output_dir;
  const std::string started = utc_now();
  const std::string hash = config_hash(cfg);

  const RunBackends b = RunBackends::resolve(registry, cfg.backends);
  check_selection_layers(cfg.feature_branch.selection, *b.layered_encoder.descriptor);
  cfg.integration.validate(b.generator.descriptor->output_dims.count("token")
                               ? b.generator.descriptor->dim("token")
                               : cfg.integration.reweight.target_dim);
  if (cfg.datasets.empty()) throw Error(ErrorCode::Config, "config has no datasets");
  if (cfg.prompts.empty()) throw Error(ErrorCode::Config, "config has no prompt sets");

  std::vector<LoadedGroup> groups;
  for (const auto& d : cfg.datasets) {
    const bool used = std::any_of(cfg.pairing.begin(), cfg.pairing.end(), [&](const auto& p) { return p.dataset == d.name; });
    if (used) groups.push_back(load_group(d, &res.notices));
  }
  std::vector<PromptSet> sets;
  for (const auto& p : cfg.prompts) {
    const bool used = std::any_of(cfg.pairing.begin(), cfg.pairing.end(), [&](const auto& x) { return x.prompts == p.name; });
    if (used) sets.push_back(load_prompts(p.file, p.name, p.expected_count, &res.notices));
  }
  const std::vector<EvalCase> cases = pair(groups, sets, cfg.pairing, cfg.seed);

  std::vector<CaseResult> results(cases.size());
  const auto run_case = [&](std::size_t i) {
    const EvalCase& c = cases[i];
    CaseResult& out = results[i];
    out.id = c.id;
    out.pairing = c.pairing;
    out.group = c.group;
    out.image_name = c.image_name;
    out.prompt_set = c.prompt_set;
    out.prompt_id = c.prompt_id;
    out.prompt = c.prompt;
    out.seed = c.seed;
    const std::string address = hex64(fnv1a64(hash + "|" + c.id + "|" + std::to_string(c.seed)));
    GeneratedPair images;
    try {
      images = generate_pair(c.image->image, c.prompt, c.seed, b, cfg);
    } catch (const std::exception& e) {
      out.id_branch = error_code_of(e);
      for (const char* n : metric_names_for_failure)
        if (enabled_record(cfg.metrics, n)) add_null(out, n, out.id_branch);
      return;
    }
    out.id_branch = images.id_branch;
    out.with_id_path = "cases/" + address + "/image_with_id.ppm";
    out.without_id_path = "cases/" + address + "/image_without_id.ppm";
    write_ppm(images.with_id, res.run_dir / out.with_id_path);
    write_ppm(images.without_id, res.run_dir / out.without_id_path);
    score_case(out, c.image->image, images, b, cfg.metrics);
  };

  int workers = std::max(1, cfg.workers);
  if (const int limit = b.concurrency_limit(); limit > 0) workers = std::min(workers, limit);
  workers = std::min<int>(workers, static_cast<int>(std::max<std::size_t>(1, cases.size())));
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  const auto worker = [&] {
    for (std::size_t i = next++; i < cases.size(); i = next++) {
      try {
        run_case(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  res.report = aggregate(hash, std::move(results));
  write_reports(res.run_dir, res.report);

  json manifest;
  manifest["config"] = to_json(cfg);
  manifest["config_hash"] = hash;
  json descs = json::array();
  for (const auto* d : b.descriptors()) descs.push_back(to_json(*d));
  manifest["backends"] = descs;
  json case_list = json::array();
  for (const auto& c : res.report.cases)
    case_list.push_back({{"id", c.id},
                         {"seed", c.seed},
                         {"image_with_id", c.with_id_path},
                         {"image_without_id", c.without_id_path}});
  manifest["cases"] = case_list;
  manifest["notices"] = res.notices;
  manifest["code_version"] = std::string(kCodeVersion);
  manifest["report"] = "report.json";
  manifest["workers"] = workers;
  manifest["started_at"] = started;
  manifest["finished_at"] = utc_now();
  write_file_atomic(res.run_dir / "manifest.json", canonical_json(manifest));
  res.manifest = std::move(manifest);
  return res;
}

json canonical_manifest(json manifest) {
  manifest.erase("started_at");
  manifest.erase("finished_at");
  return manifest;
}

MetricReport report(const std::filesystem::path& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw Error(ErrorCode::Io, "cannot open manifest " + manifest_path.string());
  json manifest;
  try {
    in >> manifest;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Io, manifest_path.string() + ": " + e.what());
  }
  const auto dir = manifest_path.parent_path();
  const auto report_path = dir / manifest.value("report", std::string("report.json"));
  std::ifstream rin(report_path);
  if (!rin) throw Error(ErrorCode::Io, "cannot open report " + report_path.string());
  json rj;
  rin >> rj;
  if (!rj.contains("cases") || rj.at("cases").empty())
    throw Error(ErrorCode::EmptyInput, "run at " + dir.string() + " has no cases to report");
  MetricReport r = report_from_json(rj);
  write_reports(dir, r);
  return r;
}

}  // namespace editid
