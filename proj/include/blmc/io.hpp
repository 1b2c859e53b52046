#pragma once

#include <string>
#include <vector>

#include "blmc/metrics.hpp"
#include "blmc/model.hpp"
#include "blmc/sampler.hpp"
#include "blmc/simdata.hpp"
#include "blmc/types.hpp"

namespace blmc {

/// CSV schema: UTF-8, comma delimiter, LF line endings, mandatory header
/// row. Missing responses are written as empty cells; "NaN" is accepted on
/// input. Numbers carry 17 significant digits so round-trips are
/// bit-faithful for doubles.
struct DatasetPaths {
  std::string locations;   // id, x1..xd
  std::string responses;   // id, y1..yq
  std::string covariates;  // id, x1..xp
};

Dataset read_dataset(const DatasetPaths& paths);

/// Writes the dataset back in its original storage order.
void write_dataset(const Dataset& data, const DatasetPaths& paths);

/// One CSV per parameter block plus a manifest tying dimensions, seed and
/// a config hash to the files.
void write_samples(const PosteriorSamples& samples, const std::string& dir);

/// Rejects manifest/dimension mismatches, naming the offending file.
/// `force` downgrades only the config-hash mismatch to a pass-through;
/// dimension checks always hold.
PosteriorSamples read_samples(const std::string& dir, bool force = false);

/// Flat CSV plus a short human-readable text summary next to it
/// (path gets ".csv"/".txt" suffixes).
void write_report(const ScoreReport& report, const std::string& path_base);

/// Key=value text format for generative specs; matrices as ';'-separated
/// rows of ','-separated entries.
GenerativeSpec read_generative_spec(const std::string& path);
void write_generative_spec(const GenerativeSpec& spec, const std::string& path);

// Generic helpers shared by the CLI.
void write_matrix_csv(const std::string& path, const std::vector<std::string>& header,
                      const Matrix& m, const std::vector<std::string>* row_ids = nullptr);
Matrix read_matrix_csv(const std::string& path, std::vector<std::string>* header = nullptr,
                       std::vector<std::string>* row_ids = nullptr);
std::string format_double(double v);

}  // namespace blmc
