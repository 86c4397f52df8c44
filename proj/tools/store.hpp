#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "varlens/core.hpp"
#include "varlens/ingest.hpp"

namespace varlens::cli {

/// On-disk dataset store:
///   manifest.tsv        one row per dataset (id, table, file, name, space,
///                       partition, origin, count)
///   ground_truth.tsv    annotated pairs, one per line
///   store.cfg           key = value metadata (word-vector file)
///   <table>/<n>.txt     the values of one column, one escaped value per line
struct DatasetStore {
  std::vector<ColumnDataset> datasets;
  std::vector<Partition> partition;  // parallel to datasets
  GroundTruth gt;
  std::string words_path;  // empty when ingested without word vectors

  std::vector<ColumnDataset> select(Partition p) const;
  std::vector<ColumnDataset> select(Partition p, ValueSpace space) const;
};

void save_store(const DatasetStore& store, const std::filesystem::path& dir);
DatasetStore load_store(const std::filesystem::path& dir);

/// Backslash escapes for tab, newline, carriage return and backslash.
std::string escape_field(std::string_view s);
std::string unescape_field(std::string_view s);

}  // namespace varlens::cli
