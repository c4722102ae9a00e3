#include "evm/io.hpp"

#include <bit>
#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <ostream>
#include <sstream>
#include <vector>

namespace evm::io {

namespace {

static_assert(std::endian::native == std::endian::little,
              "model container assumes a little-endian host");

constexpr char kMagic[4] = {'E', 'V', 'M', '1'};

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split(const std::string& line, char delim) {
  std::vector<std::string> out;
  if (delim == ' ') {
    std::istringstream ss(line);
    std::string tok;
    while (ss >> tok) out.push_back(tok);
    return out;
  }
  std::string::size_type start = 0;
  while (true) {
    const auto pos = line.find(delim, start);
    out.push_back(trim(line.substr(start, pos - start)));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

double parse_feature(const std::string& tok, std::size_t line_no) {
  const std::string t = trim(tok);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
  if (ec != std::errc() || ptr != t.data() + t.size()) {
    throw NonNumericFeature("line " + std::to_string(line_no) + ": cannot parse feature '" + t +
                            "'");
  }
  if (!std::isfinite(value)) {
    throw NonNumericFeature("line " + std::to_string(line_no) + ": non-finite feature '" + t +
                            "'");
  }
  return value;
}

ClassId intern(const std::string& name, std::map<std::string, ClassId>& by_name,
               std::map<ClassId, std::string>& by_id) {
  const auto it = by_name.find(name);
  if (it != by_name.end()) return it->second;
  const ClassId id = static_cast<ClassId>(by_name.size());
  by_name.emplace(name, id);
  by_id.emplace(id, name);
  return id;
}

struct Writer {
  std::ofstream out;

  explicit Writer(const std::filesystem::path& path)
      : out(path, std::ios::binary | std::ios::trunc) {
    if (!out) throw FileError("cannot open '" + path.string() + "' for writing");
  }

  void bytes(const void* p, std::size_t n) { out.write(static_cast<const char*>(p), static_cast<std::streamsize>(n)); }
  void u8(std::uint8_t v) { bytes(&v, 1); }
  void u32(std::uint32_t v) { bytes(&v, 4); }
  void i64(std::int64_t v) { bytes(&v, 8); }
  void u64(std::uint64_t v) { bytes(&v, 8); }
  void f64(double v) { bytes(&v, 8); }
};

struct Reader {
  std::ifstream in;
  std::filesystem::path path;

  explicit Reader(const std::filesystem::path& p) : in(p, std::ios::binary), path(p) {
    if (!in) throw FileError("cannot open '" + p.string() + "' for reading");
  }

  void bytes(void* p, std::size_t n) {
    in.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (in.gcount() != static_cast<std::streamsize>(n)) {
      throw TruncatedFile("'" + path.string() + "' ends mid-record");
    }
  }
  std::uint8_t u8() { std::uint8_t v; bytes(&v, 1); return v; }
  std::uint32_t u32() { std::uint32_t v; bytes(&v, 4); return v; }
  std::int64_t i64() { std::int64_t v; bytes(&v, 8); return v; }
  std::uint64_t u64() { std::uint64_t v; bytes(&v, 8); return v; }
  double f64() { double v; bytes(&v, 8); return v; }

  bool at_end() { return in.peek() == std::ifstream::traits_type::eof(); }
};

LabeledDataset assemble(std::vector<Vector>&& rows, std::vector<ClassId>&& labels,
                        std::map<ClassId, std::string>&& names) {
  const Index dim = rows.front().size();
  Matrix features(dim, static_cast<Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) features.col(static_cast<Index>(i)) = rows[i];
  LabeledDataset out;
  out.data = Dataset(std::move(features), std::move(labels));
  out.class_names = std::move(names);
  return out;
}

void format_row(std::ostream& out, const harness::ProtocolRow& r) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%d\t%d\t%d\t%lld\t%lld\t%.6f\t%.6f\t%.6f\t%.6f\t%.6f\n",
                r.fold, r.step, r.unknown_classes, static_cast<long long>(r.ev_count),
                static_cast<long long>(r.point_count), r.delta, r.f1, r.f1_no_reject,
                r.accuracy, r.vector_ratio);
  out << buf;
}

}  // namespace

LabeledDataset load_dense_csv(const std::filesystem::path& path, LabelColumn label_column) {
  std::ifstream in(path);
  if (!in) throw FileError("cannot open '" + path.string() + "' for reading");

  std::vector<Vector> rows;
  std::vector<ClassId> labels;
  std::map<std::string, ClassId> ids_by_name;
  std::map<ClassId, std::string> names_by_id;

  std::string line;
  std::size_t line_no = 0;
  std::size_t expected_fields = 0;
  char delim = ' ';
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    if (rows.empty()) delim = line.find(',') != std::string::npos ? ',' : ' ';

    const std::vector<std::string> fields = split(line, delim);
    if (rows.empty()) {
      expected_fields = fields.size();
      if (expected_fields < 2) {
        throw MalformedEntry("line " + std::to_string(line_no) +
                             ": need a label and at least one feature");
      }
    } else if (fields.size() != expected_fields) {
      throw RaggedRows("line " + std::to_string(line_no) + ": expected " +
                       std::to_string(expected_fields) + " fields, got " +
                       std::to_string(fields.size()));
    }

    const std::size_t label_idx = label_column == LabelColumn::kFirst ? 0 : fields.size() - 1;
    Vector features(static_cast<Index>(fields.size() - 1));
    Index fi = 0;
    for (std::size_t c = 0; c < fields.size(); ++c) {
      if (c == label_idx) continue;
      features[fi++] = parse_feature(fields[c], line_no);
    }
    labels.push_back(intern(trim(fields[label_idx]), ids_by_name, names_by_id));
    rows.push_back(std::move(features));
  }

  if (rows.empty()) throw EmptyFile("'" + path.string() + "' has no data rows");
  return assemble(std::move(rows), std::move(labels), std::move(names_by_id));
}

LabeledDataset load_sparse(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FileError("cannot open '" + path.string() + "' for reading");

  struct SparseRow {
    std::vector<std::pair<Index, double>> entries;
  };
  std::vector<SparseRow> sparse_rows;
  std::vector<ClassId> labels;
  std::map<std::string, ClassId> ids_by_name;
  std::map<ClassId, std::string> names_by_id;
  Index max_index = 0;

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const std::vector<std::string> tokens = split(line, ' ');
    labels.push_back(intern(tokens.front(), ids_by_name, names_by_id));

    SparseRow row;
    Index prev = 0;
    for (std::size_t t = 1; t < tokens.size(); ++t) {
      const auto colon = tokens[t].find(':');
      if (colon == std::string::npos || colon == 0 || colon + 1 == tokens[t].size()) {
        throw MalformedEntry("line " + std::to_string(line_no) + ": expected idx:val, got '" +
                             tokens[t] + "'");
      }
      long long idx = 0;
      const std::string idx_str = tokens[t].substr(0, colon);
      const auto [ptr, ec] = std::from_chars(idx_str.data(), idx_str.data() + idx_str.size(), idx);
      if (ec != std::errc() || ptr != idx_str.data() + idx_str.size() || idx < 1) {
        throw MalformedEntry("line " + std::to_string(line_no) + ": bad index '" + idx_str + "'");
      }
      if (idx == prev) {
        throw MalformedEntry("line " + std::to_string(line_no) + ": duplicate index " +
                             std::to_string(idx));
      }
      if (idx < prev) {
        throw NonAscendingIndices("line " + std::to_string(line_no) + ": index " +
                                  std::to_string(idx) + " after " + std::to_string(prev));
      }
      prev = idx;
      max_index = std::max<Index>(max_index, idx);
      row.entries.emplace_back(idx - 1, parse_feature(tokens[t].substr(colon + 1), line_no));
    }
    sparse_rows.push_back(std::move(row));
  }

  if (sparse_rows.empty()) throw EmptyFile("'" + path.string() + "' has no data rows");
  if (max_index == 0) {
    throw MalformedEntry("'" + path.string() + "' contains no feature entries");
  }

  std::vector<Vector> rows;
  rows.reserve(sparse_rows.size());
  for (const SparseRow& r : sparse_rows) {
    Vector v = Vector::Zero(max_index);
    for (const auto& [idx, val] : r.entries) v[idx] = val;
    rows.push_back(std::move(v));
  }
  return assemble(std::move(rows), std::move(labels), std::move(names_by_id));
}

void save_model(const EvmModel& model, const std::map<ClassId, std::string>& class_names,
                const std::filesystem::path& path) {
  model.validate();
  Writer w(path);
  w.bytes(kMagic, 4);
  w.u8(static_cast<std::uint8_t>(model.metric));
  w.u32(static_cast<std::uint32_t>(model.hyper.tau));
  w.u32(static_cast<std::uint32_t>(model.hyper.k));
  w.f64(model.hyper.sigma);
  w.f64(model.hyper.delta);
  w.u32(static_cast<std::uint32_t>(model.dim));
  w.u32(static_cast<std::uint32_t>(model.classes.size()));
  for (const auto& [id, evs] : model.classes) {
    const auto name_it = class_names.find(id);
    const std::string name = name_it != class_names.end() ? name_it->second : std::to_string(id);
    w.i64(id);
    w.u32(static_cast<std::uint32_t>(name.size()));
    w.bytes(name.data(), name.size());
    w.u64(evs.size());
    for (const PsiModel& m : evs) {
      w.bytes(m.ev.data(), sizeof(double) * static_cast<std::size_t>(m.ev.size()));
      w.f64(m.kappa);
      w.f64(m.lambda);
    }
  }
  if (!w.out) throw FileError("write to '" + path.string() + "' failed");
}

LoadedModel load_model(const std::filesystem::path& path) {
  Reader r(path);
  char magic[4];
  r.bytes(magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0) {
    if (std::memcmp(magic, kMagic, 3) == 0) {
      throw VersionUnsupported("'" + path.string() + "' has unsupported version byte '" +
                               std::string(1, magic[3]) + "'");
    }
    throw BadMagic("'" + path.string() + "' is not an EVM model file");
  }

  const std::uint8_t metric_byte = r.u8();
  if (metric_byte > 1) {
    throw MalformedEntry("'" + path.string() + "' has unknown metric code " +
                         std::to_string(metric_byte));
  }
  HyperParams hyper;
  hyper.tau = static_cast<int>(r.u32());
  hyper.k = static_cast<int>(r.u32());
  hyper.sigma = r.f64();
  hyper.delta = r.f64();
  const Index dim = static_cast<Index>(r.u32());
  const std::uint32_t n_classes = r.u32();

  std::map<ClassId, std::vector<PsiModel>> classes;
  std::map<ClassId, std::string> names;
  for (std::uint32_t c = 0; c < n_classes; ++c) {
    const ClassId id = r.i64();
    const std::uint32_t name_len = r.u32();
    std::string name(name_len, '\0');
    if (name_len > 0) r.bytes(name.data(), name_len);
    const std::uint64_t n_evs = r.u64();
    std::vector<PsiModel> evs;
    evs.reserve(n_evs);
    for (std::uint64_t e = 0; e < n_evs; ++e) {
      Vector ev(dim);
      r.bytes(ev.data(), sizeof(double) * static_cast<std::size_t>(dim));
      const double kappa = r.f64();
      const double lambda = r.f64();
      evs.emplace_back(std::move(ev), kappa, lambda);
    }
    classes.emplace(id, std::move(evs));
    names.emplace(id, std::move(name));
  }
  if (!r.at_end()) {
    throw MalformedEntry("'" + path.string() + "' has trailing bytes after the model payload");
  }

  LoadedModel out;
  out.model = EvmModel(std::move(classes), static_cast<DistanceMetric>(metric_byte), hyper, dim);
  out.class_names = std::move(names);
  return out;
}

void write_report_tsv(const harness::ProtocolReport& report, std::ostream& out) {
  out << "fold\tstep\tunknown_classes\tev_count\tpoint_count\tdelta\tf1\tf1_no_reject"
         "\taccuracy\tvector_ratio\n";
  for (const harness::ProtocolRow& r : report.rows) format_row(out, r);
  out << "\n";
  out << "step\tunknown_classes\tdelta\tmean_f1\tstd_f1\tmean_accuracy\tstd_accuracy"
         "\tmean_vector_ratio\tfolds\n";
  for (const harness::ProtocolAggregate& a : report.aggregates) {
    char buf[200];
    std::snprintf(buf, sizeof buf, "%d\t%d\t%.6f\t%.6f\t%.6f\t%.6f\t%.6f\t%.6f\t%d\n", a.step,
                  a.unknown_classes, a.delta, a.mean_f1, a.std_f1, a.mean_accuracy,
                  a.std_accuracy, a.mean_vector_ratio, a.folds);
    out << buf;
  }
}

}  // namespace evm::io
