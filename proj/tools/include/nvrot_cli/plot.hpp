#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace nvrot::cli {

inline const std::vector<std::string> kPlotLayouts = {"fig1d", "fig2c", "fig3", "fig4"};

// Reshapes result CSVs into whitespace-separated gnuplot column files:
//   fig1d  freqs CSVs      -> time_us then one kHz column per spin; one index
//                             block per input file
//   fig2c  fringes CSV     -> theta_deg signal envelope spread
//   fig3   t2map CSV       -> nonuniform matrix, theta rows by f_rot columns
//   fig4   echo CSV        -> tau_us signal spread
// Missing files, missing columns and inputs without data rows are errors
// (plot.*) and leave no output file.
std::string plot_data(const std::string& layout, const std::vector<std::filesystem::path>& inputs);

void emit_plot_data(const std::string& layout, const std::vector<std::filesystem::path>& inputs,
                    const std::filesystem::path& output);

}  // namespace nvrot::cli
