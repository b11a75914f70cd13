#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "mmdom/cli.hpp"

int main(int argc, char** argv) {
  mmdom::cli::RunConfig cfg;
  CLI::App app{"mmdom: certificates for metric measure spaces"};
  app.require_subcommand(1, 1);
  for (const auto& name : mmdom::cli::commands()) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--input", cfg.input, "primary JSON input");
    sub->add_option("--input2", cfg.input2, "second JSON input");
    sub->add_option("--eps", cfg.eps, "rational p/q");
    sub->add_option("--eps2", cfg.eps2, "second rational p/q");
    sub->add_option("--eps-seq", cfg.eps_seq, "comma-separated decreasing rationals");
    sub->add_option("--stages", cfg.stages, "stage count");
    sub->add_option("--seed", cfg.seed);
    sub->add_option("--budget-maps", cfg.budget_maps)->check(CLI::PositiveNumber);
    sub->add_option("--budget-points", cfg.budget_points)->check(CLI::PositiveNumber);
    sub->add_option("--mode", cfg.mode)->check(CLI::IsMember({"direct", "transfer"}));
    sub->add_option("--out", cfg.out, "report path (stdout when absent)");
    sub->add_option("--threads", cfg.threads, "worker threads for map searches")->check(CLI::PositiveNumber);
    sub->add_option("--n", cfg.n, "gen: point count bound");
    sub->add_option("--diam", cfg.diam, "gen: diameter bound p/q");
    sub->add_option("--count", cfg.count, "gen: number of spaces");
    sub->add_flag("--full-domain", cfg.full_domain, "eps-dominates: require the whole domain");
    sub->callback([&cfg, sub] { cfg.command = sub->get_name(); });
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : mmdom::cli::input_error;
  }

  const auto result = mmdom::cli::run(cfg);
  const std::string text = mmdom::cli::render(result.report);
  if (cfg.out.empty()) {
    std::cout << text;
  } else {
    std::ofstream out(cfg.out, std::ios::binary);
    if (!out) {
      std::cerr << "cannot write " << cfg.out << "\n";
      return mmdom::cli::input_error;
    }
    out << text;
  }
  if (result.report.contains("error")) std::cerr << "error: " << result.report["error"].get<std::string>() << "\n";
  return result.exit;
}
