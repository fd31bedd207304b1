#pragma once

#include "abcnet/core.hpp"
#include "abcnet/diagnostics.hpp"

#include <cstdint>
#include <fstream>
#include <iosfwd>
#include <string>
#include <vector>

namespace abcnet {

struct StudySpec;

class ParseError : public Error {
public:
    using Error::Error;
};

// Expression files are comma-separated text: a header row ("gene" followed
// by one label per time point), then one row per gene holding its name and
// its expression values. Rows are genes (targets), columns are time points.

/// Loads one replicate per file; all files must list the same genes in the
/// same order and have the same number of time points.
ExpressionData load_expression(const std::vector<std::string>& paths);
ExpressionData load_expression(const std::string& path);

/// Writes one replicate. Values are printed with 17 significant digits so
/// they reload exactly.
void write_replicate_csv(std::ostream& out, const ExpressionData& data, int replicate);

/// Writes every replicate; with more than one replicate the files are named
/// <stem>_rep<k><ext>. Returns the paths written.
std::vector<std::string> save_expression(const ExpressionData& data, const std::string& path);

/// Square numeric matrix with the same layout as an expression file (first
/// column names the row, header names the columns).
Matrix load_matrix_csv(const std::string& path);
void write_matrix_csv(std::ostream& out, const Matrix& m, const std::vector<std::string>& labels);

// Sample files are binary, little-endian:
//   header  "ABCNSMP1" (8 bytes), uint32 p
//   record  int32 chain_id, int64 iteration, float64 rho, p*p float64 theta
//           in row-major order (the adjacency is theta != 0)

inline constexpr std::size_t sample_record_bytes(int p) {
    return 4 + 8 + 8 + 8 * static_cast<std::size_t>(p) * static_cast<std::size_t>(p);
}

/// Append-only sample writer; the header is written on construction.
class SampleWriter {
public:
    SampleWriter(const std::string& path, int p);
    void write(const ChainSample& sample);
    long written() const { return written_; }
    void close();

private:
    std::ofstream out_;
    int p_;
    long written_ = 0;
    std::vector<double> buffer_;
};

struct SampleFile {
    int p = 0;
    std::vector<ChainSample> samples;
};

/// Reads a sample file; a truncated record raises ParseError naming the
/// record index.
SampleFile load_samples(const std::string& path);

void save_samples(const std::string& path, int p, const std::vector<ChainSample>& samples);

/// Per-parameter posterior table: target, regulator, presence, mean,
/// selected interval bounds, rigidity and its label.
void write_summary_csv(std::ostream& out, const PosteriorSummary& summary, const std::vector<std::string>& labels);

/// Histograms, one row per parameter with kHistogramBins columns.
void write_histogram_csv(std::ostream& out, const PosteriorSummary& summary, const std::vector<std::string>& labels);

/// Gelman-Rubin table, one row per parameter.
void write_rhat_csv(std::ostream& out, const std::vector<double>& rhat, int p, const std::vector<std::string>& labels,
                    double cutoff);

/// Study specification from JSON text:
///   { "timepoints": 20, "seeds": [1,2,3],
///     "generators": ["var1"], "noise_sd": [1.0],
///     "distances": ["euclidean"], "epsilon_quantiles": [0.01],
///     "prior_bounds": [[-2, 2]], "bonferroni": false,
///     "include_diagonal": true, "threads": 0,
///     "tune_sigma": [0.05, 0.1, 0.2], "tune_length": 5000,
///     "config": { "chain_length": 100000, ... RunConfig keys } }
StudySpec parse_study_spec(const std::string& json_text);
StudySpec load_study_spec(const std::string& path);

/// Applies "key = value" lines to `cfg`. Keys are RunConfig field names
/// (dashes and underscores are interchangeable); '#' starts a comment and
/// "[section]" headers are ignored, so a file may group keys freely.
void apply_config_text(RunConfig& cfg, const std::string& text, const std::string& origin = "config");
void apply_config_file(RunConfig& cfg, const std::string& path);

/// RunConfig as key = value lines (the format accepted by --config).
std::string describe_config(const RunConfig& cfg);

}  // namespace abcnet
