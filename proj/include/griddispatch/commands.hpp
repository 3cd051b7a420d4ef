#pragma once

#include "griddispatch/config.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace griddispatch::commands {

// Shared CLI-level options; zero/empty members mean "use the config value".
struct GlobalOptions {
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
};

config::RunConfig load_run_config(const std::string& path, const GlobalOptions& g);

int cmd_gen_signal(std::uint64_t seed, int steps, double step_seconds,
                   const std::string& out_path);

int cmd_powerflow(const std::string& feeder_path, const std::string& injection_csv,
                  const std::string& out_csv, bool nonlinear_sweep);

int cmd_solve_opf(const config::RunConfig& rc, const std::string& scenario_path, int horizon,
                  const std::string& out_schedule_csv, const std::string& out_summary);

int cmd_gen_demos(const config::RunConfig& rc, const std::string& out_path);

int cmd_train(const config::RunConfig& rc);

struct EvalOutput {
    std::string algorithm;
    double mean_profit = 0.0;
    double mean_cost_per_step = 0.0;
    double mean_step_seconds = 0.0;
    double mean_perf = 0.0;
    long episodes = 0;
    long steps = 0;
};

int cmd_evaluate(const config::RunConfig& rc, const std::string& checkpoint_path,
                 const std::string& out_report_csv, EvalOutput* out = nullptr);

int cmd_compare(const std::vector<std::string>& report_paths, const std::string& out_path);

// report CSV schema helpers shared by evaluate/compare
std::string eval_report_to_csv(const EvalOutput& r);
EvalOutput eval_report_from_csv(const std::string& text);

} // namespace griddispatch::commands
