#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "pbac/agent.hpp"

namespace pbac {

// out_dir/{env}/{agent}/seed_{k}, created on demand.
std::filesystem::path run_dir(const TrainConfig& cfg);

// Writes train.csv, eval.csv, visits.csv, bound.csv into `dir`. Headers
// mandatory, comma separators, '.' decimal, LF line endings.
void write_run_csvs(const TrainLog& log, const std::filesystem::path& dir);

struct EvalTable {
  std::vector<long> steps;
  std::vector<double> means;
  std::vector<std::vector<double>> per_episode;  // row per checkpoint
};

// Parses an eval.csv produced by write_run_csvs; throws on header mismatch.
EvalTable read_eval_csv(const std::filesystem::path& path);

// Line-oriented key=value files, '#' starts a comment, blank lines ignored.
std::map<std::string, std::string> read_config_file(const std::filesystem::path& path);

}  // namespace pbac
