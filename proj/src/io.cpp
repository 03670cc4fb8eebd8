#include "fsmc/io.hpp"

#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "fsmc/errors.hpp"
#include "fsmc/mountain_car.hpp"

namespace fsmc {

using nlohmann::json;

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot open for writing: " + path.string());
  out << content;
  if (!out) throw InputError("write failed: " + path.string());
}

namespace {

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open: " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) lines.push_back(line);
  }
  if (lines.empty()) throw InputError("empty dataset file: " + path.string());
  return lines;
}

json parse_line(const std::string& line, const std::filesystem::path& path) {
  try {
    return json::parse(line);
  } catch (const json::exception& e) {
    throw InputError("bad JSON line in " + path.string() + ": " + e.what());
  }
}

}  // namespace

void save_action_dataset(const ActionDataset& dataset, const std::string& env_name,
                         const std::filesystem::path& path) {
  json header;
  header["kind"] = "action";
  header["env"] = env_name;
  header["M"] = dataset.action_count;
  header["state_box"] = dataset.state_box;
  header["sigma"] = dataset.sigma;
  header["labels"] = dataset.action_labels;

  std::ostringstream out;
  out << header.dump() << "\n";
  for (const auto& rec : dataset.records) {
    json r;
    r["x"] = rec.state;
    r["a"] = rec.action;
    out << r.dump() << "\n";
  }
  write_text_file(path, out.str());
}

ActionDataset load_action_dataset(const std::filesystem::path& path) {
  const auto lines = read_lines(path);
  const json header = parse_line(lines[0], path);
  if (header.value("kind", "") != std::string("action")) {
    throw InputError("not an action dataset: " + path.string());
  }
  const std::string env_name = header.value("env", "");
  ActionDataset dataset;
  if (env_name == "mountain_car") {
    dataset.transition = make_mountain_car_env().transition;
  } else {
    throw InputError("unknown environment in dataset header: '" + env_name + "'");
  }
  dataset.action_count = header.at("M").get<int>();
  dataset.state_box = header.at("state_box").get<std::vector<std::array<double, 2>>>();
  dataset.sigma = header.at("sigma").get<double>();
  dataset.action_labels = header.at("labels").get<std::vector<int>>();
  for (std::size_t k = 1; k < lines.size(); ++k) {
    const json r = parse_line(lines[k], path);
    dataset.records.push_back(
        {r.at("x").get<std::vector<double>>(), r.at("a").get<int>()});
  }
  dataset.validate();
  return dataset;
}

void save_regression_dataset(const RegressionDataset& dataset,
                             const std::filesystem::path& path) {
  json header;
  header["kind"] = "regression";
  header["noise_std"] = dataset.noise_std;
  std::ostringstream out;
  out << header.dump() << "\n";
  for (const auto& rec : dataset.records) {
    json r;
    r["x"] = rec.x;
    r["y"] = rec.y;
    out << r.dump() << "\n";
  }
  write_text_file(path, out.str());
}

RegressionDataset load_regression_dataset(const std::filesystem::path& path) {
  const auto lines = read_lines(path);
  const json header = parse_line(lines[0], path);
  if (header.value("kind", "") != std::string("regression")) {
    throw InputError("not a regression dataset: " + path.string());
  }
  RegressionDataset dataset;
  dataset.noise_std = header.at("noise_std").get<double>();
  for (std::size_t k = 1; k < lines.size(); ++k) {
    const json r = parse_line(lines[k], path);
    dataset.records.push_back({r.at("x").get<std::vector<double>>(), r.at("y").get<double>()});
  }
  return dataset;
}

void write_chain_csv(const std::vector<ChainRecord>& records, const std::filesystem::path& path) {
  std::ostringstream out;
  out << "iteration,loglik,accepted,move\n";
  for (const auto& rec : records) {
    out << rec.iteration << ',' << format_double(rec.loglik) << ',' << (rec.accepted ? 1 : 0)
        << ',' << move_name(rec.move) << "\n";
  }
  write_text_file(path, out.str());
}

void write_samples_csv(const std::vector<std::vector<double>>& samples,
                       const std::vector<long>& iterations, const std::filesystem::path& path) {
  std::ostringstream out;
  out << "iteration,coords...\n";
  for (std::size_t s = 0; s < samples.size(); ++s) {
    out << iterations[s];
    for (double c : samples[s]) out << ',' << format_double(c);
    out << "\n";
  }
  write_text_file(path, out.str());
}

std::vector<std::vector<double>> load_samples_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open samples file: " + path.string());
  std::vector<std::vector<double>> samples;
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::size_t pos = line.find(',');  // drop the iteration column
    while (pos != std::string::npos) {
      const std::size_t next = line.find(',', pos + 1);
      row.push_back(std::stod(line.substr(pos + 1, next - pos - 1)));
      pos = next;
    }
    samples.push_back(std::move(row));
  }
  if (samples.empty()) throw InputError("no samples in " + path.string());
  return samples;
}

void write_grid_csv(const std::vector<std::array<double, 2>>& box, int cells_per_axis,
                    const std::vector<double>& values, const std::filesystem::path& path) {
  const int npts = cells_per_axis + 1;
  if (values.size() != static_cast<std::size_t>(npts) * npts) {
    throw InputError("write_grid_csv: value count does not match the grid");
  }
  std::ostringstream out;
  out << "x1,x2,value\n";
  for (int j = 0; j < npts; ++j) {
    for (int i = 0; i < npts; ++i) {
      const double x1 = box[0][0] + (box[0][1] - box[0][0]) * i / cells_per_axis;
      const double x2 = box[1][0] + (box[1][1] - box[1][0]) * j / cells_per_axis;
      out << format_double(x1) << ',' << format_double(x2) << ','
          << format_double(values[static_cast<std::size_t>(j) * npts + i]) << "\n";
    }
  }
  write_text_file(path, out.str());
}

}  // namespace fsmc
