#include "pan/data.hpp"

#include <zlib.h>

#include <algorithm>
#include <array>
#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "pan/error.hpp"

namespace pan {

namespace {

constexpr const char* kFormatName = "PANDS";
constexpr int kFormatVersion = 1;

struct SectionSpec {
  const char* name;
  std::size_t record_bytes;
};

constexpr std::array<SectionSpec, 6> kSections{{
    {"edges", 8},      // u32 pair
    {"features", 16},  // u32 row, u32 col, f64 value
    {"labels", 4},     // i32
    {"train", 4},      // u32
    {"val", 4},
    {"test", 4},
}};

template <typename T>
T read_le(const unsigned char* p) {
  T value;
  std::memcpy(&value, p, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) {
    if constexpr (sizeof(T) == 4) {
      value = std::bit_cast<T>(__builtin_bswap32(std::bit_cast<std::uint32_t>(value)));
    } else {
      value = std::bit_cast<T>(__builtin_bswap64(std::bit_cast<std::uint64_t>(value)));
    }
  }
  return value;
}

template <typename T>
void write_le(std::string& out, T value) {
  if constexpr (std::endian::native == std::endian::big) {
    if constexpr (sizeof(T) == 4) {
      value = std::bit_cast<T>(__builtin_bswap32(std::bit_cast<std::uint32_t>(value)));
    } else {
      value = std::bit_cast<T>(__builtin_bswap64(std::bit_cast<std::uint64_t>(value)));
    }
  }
  char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  out.append(buf, sizeof(T));
}

std::string hex32(std::uint32_t v) {
  char buf[9];
  std::snprintf(buf, sizeof buf, "%08x", v);
  return buf;
}

std::vector<std::uint8_t> mask_from_indices(const unsigned char* p, std::size_t count,
                                            std::size_t n_nodes, const char* name) {
  std::vector<std::uint8_t> mask(n_nodes, 0);
  for (std::size_t i = 0; i < count; ++i) {
    const auto idx = read_le<std::uint32_t>(p + 4 * i);
    if (idx >= n_nodes) {
      fail(ErrorCode::IndexOutOfRange,
           std::string(name) + " mask index " + std::to_string(idx) + " out of range");
    }
    mask[idx] = 1;
  }
  return mask;
}

}  // namespace

std::uint32_t crc32_of(const void* data, std::size_t size) {
  uLong crc = crc32(0L, Z_NULL, 0);
  const auto* bytes = static_cast<const Bytef*>(data);
  while (size > 0) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(size, 1u << 30));
    crc = crc32(crc, bytes, chunk);
    bytes += chunk;
    size -= chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

const char* split_name(Split s) noexcept {
  switch (s) {
    case Split::Train:
      return "train";
    case Split::Val:
      return "val";
    case Split::Test:
      return "test";
  }
  return "unknown";
}

const std::vector<std::uint8_t>& GraphDataset::mask(Split s) const {
  switch (s) {
    case Split::Train:
      return train_mask;
    case Split::Val:
      return val_mask;
    case Split::Test:
      return test_mask;
  }
  return test_mask;
}

Graph GraphDataset::graph() const { return Graph(adjacency); }

GraphDataset read_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot open dataset " + path);
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  const auto newline = bytes.find('\n');
  if (newline == std::string::npos) fail(ErrorCode::Format, "missing PANDS header line");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.substr(0, newline));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::Format, std::string("unreadable PANDS header: ") + e.what());
  }
  if (!header.is_object() || header.value("format", "") != kFormatName) {
    fail(ErrorCode::Format, "not a PANDS file");
  }
  if (header.value("version", -1) != kFormatVersion) {
    fail(ErrorCode::VersionMismatch,
         "unsupported PANDS version " + header.value("version", nlohmann::json()).dump());
  }

  const auto* payload = reinterpret_cast<const unsigned char*>(bytes.data()) + newline + 1;
  const std::size_t payload_size = bytes.size() - newline - 1;
  std::size_t n_nodes = 0, n_features = 0, n_classes = 0;
  try {
    n_nodes = header.at("n_nodes").get<std::size_t>();
    n_features = header.at("n_features").get<std::size_t>();
    n_classes = header.at("n_classes").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::Format, std::string("PANDS header: ") + e.what());
  }

  struct Section {
    const unsigned char* data;
    std::size_t count;
  };
  std::map<std::string, Section> sections;
  for (const auto& spec : kSections) {
    std::size_t offset = 0, length = 0, count = 0;
    std::uint32_t expected_crc = 0;
    try {
      const auto& s = header.at("sections").at(spec.name);
      offset = s.at("offset").get<std::size_t>();
      length = s.at("bytes").get<std::size_t>();
      count = s.at("count").get<std::size_t>();
      expected_crc = s.at("crc32").get<std::uint32_t>();
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::Format, std::string("PANDS section ") + spec.name + ": " + e.what());
    }
    if (length != count * spec.record_bytes) {
      fail(ErrorCode::Format, std::string("PANDS section ") + spec.name + " has a bad length");
    }
    if (offset > payload_size || length > payload_size - offset) {
      fail(ErrorCode::ChecksumMismatch,
           std::string("PANDS section ") + spec.name + " is truncated");
    }
    if (crc32_of(payload + offset, length) != expected_crc) {
      fail(ErrorCode::ChecksumMismatch,
           std::string("PANDS section ") + spec.name + " fails its CRC32 check");
    }
    sections[spec.name] = {payload + offset, count};
  }

  GraphDataset ds;
  ds.n_classes = n_classes;

  const auto& edges = sections["edges"];
  std::vector<Edge> edge_list;
  edge_list.reserve(edges.count);
  for (std::size_t e = 0; e < edges.count; ++e) {
    edge_list.emplace_back(read_le<std::uint32_t>(edges.data + 8 * e),
                           read_le<std::uint32_t>(edges.data + 8 * e + 4));
  }
  ds.adjacency = build_csr(n_nodes, edge_list).adjacency();

  const auto& feats = sections["features"];
  std::vector<Triplet> triplets;
  triplets.reserve(feats.count);
  for (std::size_t t = 0; t < feats.count; ++t) {
    const unsigned char* p = feats.data + 16 * t;
    const auto row = read_le<std::uint32_t>(p);
    const auto col = read_le<std::uint32_t>(p + 4);
    if (row >= n_nodes || col >= n_features) {
      fail(ErrorCode::IndexOutOfRange, "feature triplet index out of range");
    }
    triplets.push_back({row, col, read_le<double>(p + 8)});
  }
  ds.features = SparseMatrix::from_triplets(n_nodes, n_features, std::move(triplets));

  const auto& labels = sections["labels"];
  if (labels.count != n_nodes) {
    fail(ErrorCode::Format, "label section length differs from node count");
  }
  ds.labels.resize(n_nodes);
  for (std::size_t i = 0; i < n_nodes; ++i) {
    const auto label = read_le<std::int32_t>(labels.data + 4 * i);
    if (label < -1 || (label >= 0 && static_cast<std::size_t>(label) >= n_classes)) {
      fail(ErrorCode::IndexOutOfRange, "label " + std::to_string(label) + " out of range");
    }
    ds.labels[i] = label;
  }

  ds.train_mask = mask_from_indices(sections["train"].data, sections["train"].count, n_nodes, "train");
  ds.val_mask = mask_from_indices(sections["val"].data, sections["val"].count, n_nodes, "val");
  ds.test_mask = mask_from_indices(sections["test"].data, sections["test"].count, n_nodes, "test");
  for (std::size_t i = 0; i < n_nodes; ++i) {
    if (ds.train_mask[i] + ds.val_mask[i] + ds.test_mask[i] > 1) {
      fail(ErrorCode::MaskOverlap, "node " + std::to_string(i) + " is in more than one split");
    }
  }

  ds.checksum = hex32(crc32_of(bytes.data(), bytes.size()));
  return ds;
}

GraphDataset load_dataset(const std::string& path, const LoadOptions& options) {
  GraphDataset ds = read_dataset(path);
  const ValidationReport report = validate_dataset(ds);
  if (!report.ok) {
    fail(ErrorCode::InvalidArgument, "dataset fails validation: " + report.problems.front());
  }
  if (options.normalize_features) {
    ds.features = row_normalize_features(ds.features);
    ds.features_normalized = true;
  }
  return ds;
}

void save_dataset(const std::string& path, const GraphDataset& ds) {
  std::array<std::string, kSections.size()> payloads;
  for (std::size_t r = 0; r < ds.adjacency.n_rows(); ++r) {
    for (Index c : ds.adjacency.row_cols(r)) {
      if (c > r) {
        write_le<std::uint32_t>(payloads[0], static_cast<std::uint32_t>(r));
        write_le<std::uint32_t>(payloads[0], c);
      }
    }
  }
  for (std::size_t r = 0; r < ds.features.n_rows(); ++r) {
    auto cols = ds.features.row_cols(r);
    auto vals = ds.features.row_values(r);
    for (std::size_t p = 0; p < cols.size(); ++p) {
      write_le<std::uint32_t>(payloads[1], static_cast<std::uint32_t>(r));
      write_le<std::uint32_t>(payloads[1], cols[p]);
      write_le<double>(payloads[1], vals[p]);
    }
  }
  for (auto label : ds.labels) write_le<std::int32_t>(payloads[2], label);
  const std::array<const std::vector<std::uint8_t>*, 3> masks{&ds.train_mask, &ds.val_mask,
                                                              &ds.test_mask};
  for (std::size_t m = 0; m < masks.size(); ++m) {
    for (std::size_t i = 0; i < masks[m]->size(); ++i) {
      if ((*masks[m])[i]) write_le<std::uint32_t>(payloads[3 + m], static_cast<std::uint32_t>(i));
    }
  }

  nlohmann::json header;
  header["format"] = kFormatName;
  header["version"] = kFormatVersion;
  header["n_nodes"] = ds.n_nodes();
  header["n_features"] = ds.n_features();
  header["n_classes"] = ds.n_classes;
  std::size_t offset = 0;
  for (std::size_t s = 0; s < kSections.size(); ++s) {
    const auto& data = payloads[s];
    header["sections"][kSections[s].name] = {
        {"offset", offset},
        {"bytes", data.size()},
        {"count", data.size() / kSections[s].record_bytes},
        {"crc32", crc32_of(data.data(), data.size())},
    };
    offset += data.size();
  }

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::Io, "cannot write dataset " + path);
  out << header.dump() << '\n';
  for (const auto& data : payloads) out.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!out) fail(ErrorCode::Io, "short write to " + path);
}

DenseMatrix row_normalize_features(const DenseMatrix& x) {
  DenseMatrix out = x;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    double sum = 0.0;
    for (double v : row) {
      if (v < 0.0) fail(ErrorCode::InvalidArgument, "features must be nonnegative");
      sum += v;
    }
    if (sum == 0.0) continue;
    for (double& v : row) v /= sum;
  }
  return out;
}

SparseMatrix row_normalize_features(const SparseMatrix& x) {
  std::vector<double> vals(x.values().begin(), x.values().end());
  for (std::size_t r = 0; r < x.n_rows(); ++r) {
    double sum = 0.0;
    for (double v : x.row_values(r)) {
      if (v < 0.0) fail(ErrorCode::InvalidArgument, "features must be nonnegative");
      sum += v;
    }
    if (sum == 0.0) continue;
    for (std::size_t p = x.row_offsets()[r]; p < x.row_offsets()[r + 1]; ++p) vals[p] /= sum;
  }
  return SparseMatrix(x.n_rows(), x.n_cols(),
                      std::vector<std::size_t>(x.row_offsets().begin(), x.row_offsets().end()),
                      std::vector<Index>(x.col_indices().begin(), x.col_indices().end()),
                      std::move(vals));
}

nlohmann::json ValidationReport::to_json() const {
  return {
      {"ok", ok},
      {"problems", problems},
      {"n_nodes", n_nodes},
      {"n_edges", n_edges},
      {"n_features", n_features},
      {"n_classes", n_classes},
      {"isolated_nodes", isolated_nodes},
      {"mask_sizes", mask_sizes},
      {"label_coverage", label_coverage},
  };
}

ValidationReport validate_dataset(const GraphDataset& ds) {
  ValidationReport report;
  auto problem = [&](std::string what) {
    report.ok = false;
    report.problems.push_back(std::move(what));
  };
  const std::size_t n = ds.n_nodes();
  report.n_nodes = n;
  report.n_features = ds.features.n_cols();
  report.n_classes = ds.n_classes;

  if (ds.adjacency.n_rows() != n || ds.adjacency.n_cols() != n) {
    problem("adjacency shape differs from node count");
  } else {
    report.n_edges = ds.adjacency.nnz() / 2;
    if (symmetry_residual(ds.adjacency) != 0.0) problem("adjacency is not symmetric");
    for (std::size_t r = 0; r < n; ++r) {
      auto cols = ds.adjacency.row_cols(r);
      if (cols.empty()) ++report.isolated_nodes;
      for (std::size_t p = 0; p < cols.size(); ++p) {
        if (cols[p] == r) {
          problem("adjacency has a self-loop at node " + std::to_string(r));
          break;
        }
        if (ds.adjacency.row_values(r)[p] != 1.0) {
          problem("adjacency is not binary");
          break;
        }
      }
    }
  }
  if (ds.features.n_rows() != n) problem("feature rows differ from node count");

  const std::array<Split, 3> splits{Split::Train, Split::Val, Split::Test};
  for (Split s : splits) {
    const auto& mask = ds.mask(s);
    const char* name = split_name(s);
    if (mask.size() != n) {
      problem(std::string(name) + " mask length differs from node count");
      continue;
    }
    std::vector<std::size_t> coverage(ds.n_classes, 0);
    std::size_t size = 0;
    bool unlabeled = false;
    for (std::size_t i = 0; i < n; ++i) {
      if (!mask[i]) continue;
      ++size;
      const auto label = ds.labels[i];
      if (label < 0 || static_cast<std::size_t>(label) >= ds.n_classes) {
        unlabeled = true;
      } else {
        ++coverage[static_cast<std::size_t>(label)];
      }
    }
    if (unlabeled) problem(std::string("unlabeled masked node in ") + name + " split");
    report.mask_sizes[name] = size;
    report.label_coverage[name] = std::move(coverage);
  }
  if (ds.train_mask.size() == n && ds.val_mask.size() == n && ds.test_mask.size() == n) {
    for (std::size_t i = 0; i < n; ++i) {
      if (ds.train_mask[i] + ds.val_mask[i] + ds.test_mask[i] > 1) {
        problem("masks overlap at node " + std::to_string(i));
        break;
      }
    }
  }
  return report;
}

}  // namespace pan
