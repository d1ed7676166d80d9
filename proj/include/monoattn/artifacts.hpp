#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <string>
#include <vector>

namespace monoattn {

// Formatting and file outputs shared by the experiment harnesses. All
// writers are deterministic: identical inputs produce byte-identical files.

std::string formatG9(double v);   // 9 significant digits
std::string formatG17(double v);  // round-trips doubles exactly

// One row per decoder step, N comma-separated weights, 9 significant digits.
void writeAlignmentCsv(const Eigen::MatrixXd& alignment,
                       const std::filesystem::path& file);

// Plain portable graymap (P2), width N, height T', pixel = round(255 *
// weight), for eyeballing alignments.
void writeAlignmentPgm(const Eigen::MatrixXd& alignment,
                       const std::filesystem::path& file);

void writeFramesCsv(const Eigen::MatrixXd& frames,
                    const std::filesystem::path& file);

void writeLines(const std::vector<std::string>& lines,
                const std::filesystem::path& file);

std::string readFile(const std::filesystem::path& file);

// Fresh run directory: `parent/<command>-<timestamp>-<n>`, never reusing an
// existing path. With an explicit `out`, the directory must not already
// exist.
std::filesystem::path makeRunDir(const std::filesystem::path& parent,
                                 const std::string& command);
std::filesystem::path claimOutDir(const std::filesystem::path& out);

}  // namespace monoattn
