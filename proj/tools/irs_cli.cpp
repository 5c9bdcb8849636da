// Command-line front end: one subcommand per pipeline stage.
//
// Exit status: 0 success, 1 stage failure, 2 usage error.

#include <omp.h>

#include <CLI11.hpp>
#include <iostream>
#include <optional>

#include "irs/config.hpp"
#include "irs/pipeline.hpp"

namespace {

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
  std::optional<std::string> work_dir;
  std::optional<std::string> output_dir;
  std::optional<std::string> dataset_root;
  bool serial = false;
  bool quiet = false;
};

irs::pipeline::Context make_context(const Common& c) {
  irs::pipeline::Context ctx;
  if (!c.config_path.empty()) ctx.cfg = irs::config::load_config(c.config_path);
  if (c.seed) ctx.cfg.master_seed = *c.seed;
  if (c.work_dir) ctx.cfg.paths.work_dir = *c.work_dir;
  if (c.output_dir) ctx.cfg.paths.output_dir = *c.output_dir;
  if (c.dataset_root) ctx.cfg.paths.dataset_root = *c.dataset_root;
  if (c.jobs) omp_set_num_threads(*c.jobs);
  ctx.exec = c.serial ? irs::dsp::Exec::serial : irs::dsp::Exec::parallel;
  ctx.log = c.quiet ? nullptr : &std::cerr;
  return ctx;
}

void print_result(const char* stage, const irs::pipeline::StageResult& r) {
  std::cout << stage << ": " << r.written << " written, " << r.skipped << " up to date\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Impulse-response simulation pipeline for spatial data augmentation"};
  app.require_subcommand(1);
  app.fallthrough();
  Common common;
  app.add_option("--config", common.config_path, "JSON configuration file")->check(CLI::ExistingFile);
  app.add_option("--seed", common.seed, "Master seed (overrides the config)");
  app.add_option("--jobs", common.jobs, "Worker threads for parallel stages")->check(CLI::PositiveNumber);
  app.add_option("--work-dir", common.work_dir, "Bank directory (overrides paths.work_dir)");
  app.add_option("--output-dir", common.output_dir, "Fold output directory (overrides paths.output_dir)");
  app.add_option("--dataset-root", common.dataset_root, "Dataset root (overrides paths.dataset_root)");
  app.add_flag("--serial", common.serial, "Use the serial reference kernels");
  app.add_flag("--quiet", common.quiet, "Suppress progress messages");

  int rir_count = -1;
  auto* sim = app.add_subcommand("simulate-rir", "Simulate the SH RIR bank");
  sim->add_option("--count", rir_count, "Number of RIRs (default rooms x placements_per_room)");
  auto* ext = app.add_subcommand("extract", "Label-based extraction of static single-source segments");
  std::optional<std::string> detector;
  auto* eli = app.add_subcommand("eliminate", "Detection- and eigenvalue-based interference elimination");
  eli->add_option("--detector", detector, "accept-all | reject-all | energy-threshold[:dB] | predictions:<path>");
  auto* enh = app.add_subcommand("enhance", "CGMM/MVDR enhancement of the kept segments");
  std::optional<int> clips;
  std::optional<double> duration;
  bool no_noise = false;
  auto* aug = app.add_subcommand("augment", "Generate the augmented folds");
  aug->add_option("--clips", clips, "Clips per fold (overrides the config)")->check(CLI::PositiveNumber);
  aug->add_option("--duration", duration, "Clip duration in seconds (overrides the config)")
      ->check(CLI::PositiveNumber);
  aug->add_flag("--no-noise", no_noise, "Disable the diffuse noise");
  auto* ins = app.add_subcommand("inspect", "Bank statistics and the elimination report");
  auto* all = app.add_subcommand("run-all", "All stages in order");
  all->add_option("--count", rir_count, "Number of RIRs (default rooms x placements_per_room)");
  std::string config_out;
  auto* pcfg = app.add_subcommand("print-config", "Write the effective configuration as JSON");
  pcfg->add_option("--out", config_out, "Output file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n\n" << app.help();
    return 2;
  }

  try {
    auto ctx = make_context(common);
    if (detector) ctx.cfg.elimination.detector = *detector;
    for (auto& f : ctx.cfg.augment.folds) {
      if (clips) f.clip_count = *clips;
      if (duration) f.clip_duration_s = *duration;
    }
    if (no_noise) ctx.cfg.augment.noise = false;
    ctx.cfg.validate();
    const int count = rir_count >= 0 ? rir_count : ctx.cfg.rooms.rooms * ctx.cfg.rooms.placements_per_room;

    if (*sim) {
      print_result("simulate-rir", irs::pipeline::simulate_rirs(ctx, count));
    } else if (*ext) {
      print_result("extract", irs::pipeline::extract(ctx));
    } else if (*eli) {
      const auto o = irs::pipeline::eliminate(ctx);
      std::cout << o.report.to_text();
    } else if (*enh) {
      print_result("enhance", irs::pipeline::enhance(ctx));
    } else if (*aug) {
      print_result("augment", irs::pipeline::augment(ctx));
    } else if (*ins) {
      std::cout << irs::pipeline::inspect(ctx);
    } else if (*all) {
      irs::pipeline::run_all(ctx, count);
    } else if (*pcfg) {
      const std::string text = irs::config::to_json(ctx.cfg).dump(2) + "\n";
      if (config_out.empty()) {
        std::cout << text;
      } else {
        irs::config::save_config(config_out, ctx.cfg);
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
