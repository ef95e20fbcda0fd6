#include "pbac/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace pbac {

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::ofstream open_for_write(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);  // binary keeps LF endings everywhere
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  return out;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) fields.push_back(field);
  return fields;
}

}  // namespace

std::filesystem::path run_dir(const TrainConfig& cfg) {
  std::filesystem::path dir = std::filesystem::path(cfg.out_dir) / cfg.env / cfg.agent /
                              ("seed_" + std::to_string(cfg.seed));
  std::filesystem::create_directories(dir);
  return dir;
}

void write_run_csvs(const TrainLog& log, const std::filesystem::path& dir) {
  {
    auto out = open_for_write(dir / "train.csv");
    out << "step,episode_return,loss_diversity,loss_coherence,loss_propagation,alpha,"
           "active_head\n";
    for (const auto& rec : log.steps)
      out << rec.step << ',' << fmt(rec.episode_return) << ',' << fmt(rec.loss.diversity)
          << ',' << fmt(rec.loss.coherence) << ',' << fmt(rec.loss.propagation) << ','
          << fmt(rec.alpha) << ',' << rec.active_head << '\n';
  }
  {
    auto out = open_for_write(dir / "eval.csv");
    out << "step,eval_return_mean";
    const size_t episodes = log.evals.empty() ? 0 : log.evals.front().returns.size();
    for (size_t e = 0; e < episodes; ++e) out << ",eval_return_" << e;
    out << '\n';
    for (const auto& rec : log.evals) {
      out << rec.step << ',' << fmt(rec.mean_return);
      for (double r : rec.returns) out << ',' << fmt(r);
      out << '\n';
    }
  }
  {
    auto out = open_for_write(dir / "visits.csv");
    out << "step,dim_a,dim_b\n";
    for (const auto& rec : log.visits)
      out << rec.step << ',' << fmt(rec.dim_a) << ',' << fmt(rec.dim_b) << '\n';
  }
  {
    auto out = open_for_write(dir / "bound.csv");
    out << "step,empirical_risk,kl,variance_term,rhs\n";
    for (const auto& rec : log.bounds)
      out << rec.step << ',' << fmt(rec.empirical_risk) << ',' << fmt(rec.kl) << ','
          << fmt(rec.variance_term) << ',' << fmt(rec.rhs) << '\n';
  }
}

EvalTable read_eval_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty eval csv: " + path.string());
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_csv_line(line);
  if (header.size() < 2 || header[0] != "step" || header[1] != "eval_return_mean")
    throw std::runtime_error("eval csv header mismatch: " + path.string());
  for (size_t e = 2; e < header.size(); ++e)
    if (header[e] != "eval_return_" + std::to_string(e - 2))
      throw std::runtime_error("eval csv header mismatch: " + path.string());

  EvalTable table;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != header.size())
      throw std::runtime_error("eval csv row width mismatch: " + path.string());
    table.steps.push_back(std::stol(fields[0]));
    table.means.push_back(std::stod(fields[1]));
    std::vector<double> row;
    for (size_t e = 2; e < fields.size(); ++e) row.push_back(std::stod(fields[e]));
    table.per_episode.push_back(std::move(row));
  }
  return table;
}

std::map<std::string, std::string> read_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config: " + path.string());
  std::map<std::string, std::string> values;
  std::string line;
  while (std::getline(in, line)) {
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto strip = [](std::string s) {
      const auto a = s.find_first_not_of(" \t\r");
      if (a == std::string::npos) return std::string();
      const auto b = s.find_last_not_of(" \t\r");
      return s.substr(a, b - a + 1);
    };
    line = strip(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("config line without '=': " + line);
    const std::string key = strip(line.substr(0, eq));
    const std::string value = strip(line.substr(eq + 1));
    if (key.empty()) throw std::runtime_error("config line with empty key: " + line);
    values[key] = value;
  }
  return values;
}

}  // namespace pbac
