#include <iostream>

#include <CLI11.hpp>

#include "lamdrl.hpp"
#include "lamdrl/runtime.hpp"

using namespace lamdrl;

int main(int argc, char** argv) {
  tune_allocator();
  CLI::App app{"LAM-DRL resource allocation simulator"};
  app.require_subcommand(0, 1);

  std::string print_profile;
  auto* print = app.add_option("--print-config", print_profile, "dump every key for a profile (desk|paper) and exit")
                    ->expected(0, 1)
                    ->default_str("desk");

  auto* run = app.add_subcommand("run", "train and evaluate a campaign");
  std::string config_path;
  std::vector<std::string> allocators;
  std::string scenario, provider, out_dir, checkpoint_dir, resume_dir;
  std::vector<std::uint64_t> seeds;
  bool quiet = false;
  run->add_option("--config", config_path, "key = value config file")->check(CLI::ExistingFile);
  run->add_option("--allocator", allocators, "equal|wf|mmf|pc|drl|lamdrl (repeatable)");
  run->add_option("--scenario", scenario, "nominal|extreme");
  run->add_option("--seed", seeds, "campaign seed (repeatable)");
  run->add_option("--provider", provider, "mock|remote");
  run->add_option("--out", out_dir, "output directory");
  run->add_option("--checkpoint", checkpoint_dir, "save trained agents here");
  run->add_option("--resume", resume_dir, "load agents from this checkpoint directory before training");
  run->add_flag("-q,--quiet", quiet, "no progress log");

  auto* sum = app.add_subcommand("summarize", "rebuild the summary and plot files from raw CSVs");
  std::string in_dir;
  sum->add_option("--in", in_dir, "campaign output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (print->count() > 0) {
      std::cout << render_config(campaign_for_profile(print_profile.empty() ? "desk" : print_profile));
      return 0;
    }
    if (*run) {
      CampaignConfig cfg = config_path.empty() ? CampaignConfig{} : load_config(config_path);
      if (!allocators.empty()) {
        cfg.allocators.clear();
        for (const auto& a : allocators) cfg.allocators.push_back(parse_allocator(a));
      }
      if (!scenario.empty()) cfg.scenarios = {parse_weather(scenario)};
      if (!seeds.empty()) cfg.seeds = seeds;
      if (!provider.empty()) cfg.provider = provider;
      if (!out_dir.empty()) cfg.output_dir = out_dir;
      CampaignOptions opts;
      if (!quiet) opts.log = &std::cerr;
      if (!checkpoint_dir.empty()) opts.checkpoint_dir = checkpoint_dir;
      if (!resume_dir.empty()) opts.resume_dir = resume_dir;
      const auto result = run_campaign(cfg, opts);
      for (const auto& c : result.report.cells)
        std::cout << c.allocator << " " << c.scenario << " sum_rate " << fmt_num(c.sum_rate.mean / 1e6) << " Mbps"
                  << " jain " << fmt_num(c.jain.mean) << " outage " << fmt_num(c.outage.mean) << " (n=" << c.sum_rate.n
                  << ")\n";
      for (const auto& n : result.report.notes) std::cout << "note: " << n << "\n";
      std::cout << "wrote " << cfg.output_dir << "\n";
      return 0;
    }
    if (*sum) {
      const auto rep = summarize(in_dir);
      std::cout << "summarized " << rep.cells.size() << " allocator/scenario cells in " << in_dir << "\n";
      return 0;
    }
    std::cout << app.help();
    return 0;
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
