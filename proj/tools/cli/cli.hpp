#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "resadapt/dataset.hpp"

namespace resadapt::cli {

/// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kValidation = 1;
inline constexpr int kIoOrParse = 2;
inline constexpr int kNonConvergence = 3;

/// Runs the tool on `args` (without the program name). Results go to `out`
/// unless a subcommand writes to a file; diagnostics go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Tidy CSV for a figure family: fig3, fig4, fig9, fig10 or fig11.
/// Throws ValidationError on an unknown family.
void write_figure_csv(const std::string& family, const data::Dataset& dataset,
                      std::ostream& out);

}  // namespace resadapt::cli
