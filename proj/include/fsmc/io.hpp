#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "fsmc/action_likelihood.hpp"
#include "fsmc/regression_likelihood.hpp"
#include "fsmc/samplers.hpp"

namespace fsmc {

// doubles are printed with %.17g so files round-trip bit-exactly
std::string format_double(double v);

// --- line-delimited JSON datasets -----------------------------------------
// First line is a header object; every following line is one record.
// Action records: {"x":[...],"a":k}; regression records: {"x":[...],"y":v}.

void save_action_dataset(const ActionDataset& dataset, const std::string& env_name,
                         const std::filesystem::path& path);
// the transition map is rebuilt from the header's env name
ActionDataset load_action_dataset(const std::filesystem::path& path);

void save_regression_dataset(const RegressionDataset& dataset,
                             const std::filesystem::path& path);
RegressionDataset load_regression_dataset(const std::filesystem::path& path);

// --- CSV emitters ----------------------------------------------------------

void write_chain_csv(const std::vector<ChainRecord>& records, const std::filesystem::path& path);

// one row per snapshot: iteration followed by the flat coordinates
void write_samples_csv(const std::vector<std::vector<double>>& samples,
                       const std::vector<long>& iterations, const std::filesystem::path& path);
std::vector<std::vector<double>> load_samples_csv(const std::filesystem::path& path);

// rows x1,x2,value over a uniform grid on the given box
void write_grid_csv(const std::vector<std::array<double, 2>>& box, int cells_per_axis,
                    const std::vector<double>& values, const std::filesystem::path& path);

void write_text_file(const std::filesystem::path& path, const std::string& content);

}  // namespace fsmc
