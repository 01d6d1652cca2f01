#include <cstdio>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "editid/fixtures.hpp"
#include "editid/harness.hpp"
#include "editid/sweep.hpp"

namespace {

using namespace editid;
using nlohmann::json;

HarnessConfig load(const std::string& path, const std::string& output_dir, int workers) {
  HarnessConfig cfg = load_config(path);
  apply_env_overrides(cfg);
  if (!output_dir.empty()) cfg.output_dir = output_dir;
  if (workers > 0) cfg.workers = workers;
  return cfg;
}

void print_notices(const std::vector<std::string>& notices) {
  for (const auto& n : notices) std::cerr << "warning: " << n << "\n";
}

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Io, path + ": " + e.what());
  }
  return j;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"EditID generation and IBench evaluation"};
  app.require_subcommand(1);

  std::string config_path, output_dir;
  int workers = 0;
  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("-c,--config", config_path, "run config (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("-o,--output-dir", output_dir, "override output_dir");
    sub->add_option("-j,--workers", workers, "override workers")->check(CLI::PositiveNumber);
  };

  auto* gen = app.add_subcommand("generate", "generate one case with and without the ID branch");
  add_common(gen);
  std::string image_path, prompt, gender = "unknown";
  std::uint64_t seed = 0;
  bool seed_given = false;
  gen->add_option("-i,--image", image_path, "ID image (.ppm)")->required()->check(CLI::ExistingFile);
  gen->add_option("-p,--prompt", prompt, "prompt text, may contain [person]")->required();
  gen->add_option("--gender", gender, "man, woman or unknown");
  gen->add_option("-s,--seed", seed, "sampler seed (default: sampler.seed)")->each([&](const std::string&) { seed_given = true; });

  auto* run_cmd = app.add_subcommand("run", "full evaluation over the configured pairings");
  add_common(run_cmd);

  auto* sweep_sel = app.add_subcommand("sweep-selections", "one run per layer selection");
  add_common(sweep_sel);
  std::string selection_file;
  sweep_sel->add_option("-f,--file", selection_file, "one selection per line")->required()->check(CLI::ExistingFile);

  auto* sweep_fus = app.add_subcommand("sweep-fusion", "one run per fusion/reweight combination");
  add_common(sweep_fus);
  std::string combos_file;
  sweep_fus->add_option("--combos", combos_file, "JSON list of {fusion, reweight}; default: the six methods")
      ->check(CLI::ExistingFile);

  auto* report_cmd = app.add_subcommand("report", "re-render a finished run's report");
  std::string manifest_path;
  report_cmd->add_option("-m,--manifest", manifest_path, "manifest.json of a run")->required()->check(CLI::ExistingFile);

  auto* plot = app.add_subcommand("plot-tradeoff", "Facesim/Posediv deltas of a sweep against a baseline run");
  std::string baseline_path, sweep_path, out_path;
  plot->add_option("-b,--baseline", baseline_path, "baseline report.json")->required()->check(CLI::ExistingFile);
  plot->add_option("--sweep", sweep_path, "sweep.json")->required()->check(CLI::ExistingFile);
  plot->add_option("--out", out_path, "output CSV (default: stdout)");

  auto* fixtures = app.add_subcommand("fixtures", "write the synthetic face corpus and prompt files");
  std::string fixture_dir;
  FixtureCorpusSpec spec;
  fixtures->add_option("--out", fixture_dir, "target directory")->required();
  fixtures->add_option("--seed", spec.seed, "drawing seed");
  fixtures->add_option("--side", spec.side, "image side in pixels")->check(CLI::Range(8, 1024));

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      HarnessConfig cfg = load(config_path, output_dir, workers);
      BackendRegistry registry;
      populate_registry(registry, cfg.backends);
      const auto b = RunBackends::resolve(registry, cfg.backends);
      const ImageBuffer id_image = read_ppm(image_path);
      id_image.validate();
      PromptRecord rec{1, prompt, prompt.find(kPersonPlaceholder) != std::string::npos};
      CaseResult out;
      out.id = image_path;
      out.prompt = substitute_gender(rec, parse_gender(gender));
      out.seed = seed_given ? seed : cfg.sampler.seed;
      const auto images = generate_pair(id_image, out.prompt, out.seed, b, cfg);
      out.id_branch = images.id_branch;
      out.with_id_path = "image_with_id.ppm";
      out.without_id_path = "image_without_id.ppm";
      write_ppm(images.with_id, cfg.output_dir / out.with_id_path);
      write_ppm(images.without_id, cfg.output_dir / out.without_id_path);
      score_case(out, id_image, images, b, cfg.metrics);
      std::cout << canonical_json(to_json(out));
    } else if (*run_cmd) {
      HarnessConfig cfg = load(config_path, output_dir, workers);
      BackendRegistry registry;
      populate_registry(registry, cfg.backends);
      const auto res = run(cfg, registry);
      print_notices(res.notices);
      std::cout << render_text(res.report) << "written to " << res.run_dir.string() << "\n";
    } else if (*sweep_sel) {
      HarnessConfig cfg = load(config_path, output_dir, workers);
      BackendRegistry registry;
      populate_registry(registry, cfg.backends);
      const auto t = sweep_selections(cfg, registry, load_selection_file(selection_file));
      std::cout << render_sweep_text(t);
    } else if (*sweep_fus) {
      HarnessConfig cfg = load(config_path, output_dir, workers);
      BackendRegistry registry;
      populate_registry(registry, cfg.backends);
      const auto combos = combos_file.empty() ? default_fusion_combos(cfg.integration.reweight)
                                              : load_fusion_combos(read_json(combos_file));
      const auto t = sweep_fusion(cfg, registry, combos);
      std::cout << render_sweep_text(t);
    } else if (*report_cmd) {
      std::cout << render_text(report(manifest_path));
    } else if (*plot) {
      const auto baseline = report_from_json(read_json(baseline_path));
      const auto points = plot_tradeoff(baseline, sweep_from_json(read_json(sweep_path)));
      const auto csv = render_tradeoff_csv(points, baseline.config_hash);
      if (out_path.empty()) std::cout << csv;
      else write_file_atomic(out_path, csv);
    } else if (*fixtures) {
      write_fixture_corpus(fixture_dir, spec);
      std::cout << "fixtures written to " << fixture_dir << "\n";
    }
  } catch (const Error& e) {
    std::cerr << "error [" << to_string(e.code()) << "]: " << e.what() << "\n";
    return e.code() == ErrorCode::Config || e.code() == ErrorCode::NotFound ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
