#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "pan/dense.hpp"
#include "pan/graph.hpp"
#include "pan/sparse.hpp"

namespace pan {

enum class Split { Train, Val, Test };

const char* split_name(Split s) noexcept;

/// A node-classification dataset with its fixed train/val/test split.
///
/// Features are held in CSR form (bag-of-words inputs are ~1% dense); use
/// to_dense() when a dense view is needed. Labels of -1 mark unlabeled nodes.
/// Instances built by hand are not validated; load_dataset() always returns a
/// dataset that passes validate_dataset().
struct GraphDataset {
  SparseMatrix adjacency;
  SparseMatrix features;
  std::vector<std::int32_t> labels;
  std::vector<std::uint8_t> train_mask;
  std::vector<std::uint8_t> val_mask;
  std::vector<std::uint8_t> test_mask;
  std::size_t n_classes = 0;
  std::string checksum;  // CRC32 of the file it was loaded from, hex
  bool features_normalized = false;

  std::size_t n_nodes() const noexcept { return labels.size(); }
  std::size_t n_features() const noexcept { return features.n_cols(); }
  const std::vector<std::uint8_t>& mask(Split s) const;

  /// Throws if the adjacency is not a simple undirected graph.
  Graph graph() const;
};

struct LoadOptions {
  bool normalize_features = true;
};

/// Reads a PANDS v1 file. Errors: Io, Format, VersionMismatch,
/// ChecksumMismatch (including truncation), IndexOutOfRange, MaskOverlap,
/// SelfLoop, InvalidArgument for other invariant breaches.
GraphDataset load_dataset(const std::string& path, const LoadOptions& options = {});

/// Structural read only: everything load_dataset checks except the final
/// validate_dataset() pass. Features are left unnormalized.
GraphDataset read_dataset(const std::string& path);

/// Writes a PANDS v1 file: the upper triangle of the adjacency as the edge
/// list, the features as CSR-ordered triplets, and the masks as index lists.
void save_dataset(const std::string& path, const GraphDataset& ds);

/// Divides every nonzero row by its sum; zero rows stay zero. Negative entries
/// raise InvalidArgument.
DenseMatrix row_normalize_features(const DenseMatrix& x);
SparseMatrix row_normalize_features(const SparseMatrix& x);

struct ValidationReport {
  bool ok = true;
  std::vector<std::string> problems;
  std::size_t n_nodes = 0;
  std::size_t n_edges = 0;
  std::size_t n_features = 0;
  std::size_t n_classes = 0;
  std::size_t isolated_nodes = 0;
  std::map<std::string, std::size_t> mask_sizes;
  std::map<std::string, std::vector<std::size_t>> label_coverage;  // per-class counts

  nlohmann::json to_json() const;
};

ValidationReport validate_dataset(const GraphDataset& ds);

std::uint32_t crc32_of(const void* data, std::size_t size);

}  // namespace pan
