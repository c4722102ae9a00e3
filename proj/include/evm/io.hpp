#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>

#include "evm/harness.hpp"
#include "evm/types.hpp"

namespace evm::io {

/// A dataset plus the mapping from interned class ids back to the label
/// strings found in the file (ids are assigned in first-appearance order).
struct LabeledDataset {
  Dataset data = Dataset::empty(1);
  std::map<ClassId, std::string> class_names;
};

enum class LabelColumn { kFirst, kLast };

/// Dense delimited text, one sample per row, label in the first or last
/// column. Comma-separated when the first row contains a comma, otherwise
/// whitespace-separated.
LabeledDataset load_dense_csv(const std::filesystem::path& path, LabelColumn label_column);

/// Sparse "label idx:val ..." lines with strictly ascending 1-based indices;
/// densified with dim = largest index in the file.
LabeledDataset load_sparse(const std::filesystem::path& path);

/// Binary "EVM1" container. Floats are stored as raw little-endian IEEE
/// doubles, so a round trip reproduces the model bit for bit.
void save_model(const EvmModel& model, const std::map<ClassId, std::string>& class_names,
                const std::filesystem::path& path);

struct LoadedModel {
  EvmModel model;
  std::map<ClassId, std::string> class_names;
};

LoadedModel load_model(const std::filesystem::path& path);

/// Tab-separated report: one row per (fold, openness) cell, a blank line,
/// then the per-step aggregate section.
void write_report_tsv(const harness::ProtocolReport& report, std::ostream& out);

}  // namespace evm::io
