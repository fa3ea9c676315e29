#include "divkit/dataio.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>

#include "divkit/errors.hpp"

namespace divkit {
namespace {

static_assert(std::endian::native == std::endian::little, "binary I/O assumes a little-endian host");

std::string format_double(double v) {
  if (!std::isfinite(v)) throw Error(ErrorKind::NonFiniteEntry, "cannot serialize non-finite value");
  std::array<char, 32> buf{};
  std::snprintf(buf.data(), buf.size(), "%.17g", v);
  std::string s(buf.data());
  if (s.find_first_of(".eE") == std::string::npos) s += ".0";
  return s;
}

void dump_string(const std::string& s, std::string& out) {
  // nlohmann's escaping is already deterministic; reuse it for strings.
  out += Json(s).dump(-1, ' ', false, Json::error_handler_t::strict);
}

void dump(const Json& j, std::string& out) {
  switch (j.type()) {
    case Json::value_t::object: {
      out += '{';
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {  // std::map: sorted keys
        if (!first) out += ',';
        first = false;
        dump_string(it.key(), out);
        out += ':';
        dump(it.value(), out);
      }
      out += '}';
      break;
    }
    case Json::value_t::array: {
      out += '[';
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (i) out += ',';
        dump(j[i], out);
      }
      out += ']';
      break;
    }
    case Json::value_t::number_float:
      out += format_double(j.get<double>());
      break;
    case Json::value_t::string:
      dump_string(j.get<std::string>(), out);
      break;
    default:
      out += j.dump();
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoFailure, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

template <class T>
T read_le(const std::string& bytes, std::size_t offset) {
  T v;
  std::memcpy(&v, bytes.data() + offset, sizeof(T));
  return v;
}

template <class T>
void append_le(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

Matrix parse_csv(const std::string& text, const std::string& name) {
  std::vector<double> values;
  Eigen::Index cols = -1;
  Eigen::Index rows = 0;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    std::string_view line = trim(std::string_view(text).substr(pos, end - pos));
    pos = end + 1;
    ++line_no;
    if (line.empty()) continue;
    if (line_no == 1 && line.front() == '#') continue;

    Eigen::Index count = 0;
    std::size_t start = 0;
    while (true) {
      auto comma = line.find(',', start);
      std::string_view field = trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
      double v = 0.0;
      const char* first = field.data();
      if (!field.empty() && field.front() == '+') ++first;
      auto [ptr, ec] = std::from_chars(first, field.data() + field.size(), v);
      if (field.empty() || ec != std::errc() || ptr != field.data() + field.size())
        throw Error(ErrorKind::MalformedFile, name + ": bad number '" + std::string(field) + "' on line " +
                                                  std::to_string(line_no));
      if (!std::isfinite(v))
        throw Error(ErrorKind::NonFiniteEntry, name + ": row " + std::to_string(rows) + ", column " +
                                                   std::to_string(count));
      values.push_back(v);
      ++count;
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (cols < 0) cols = count;
    if (count != cols)
      throw Error(ErrorKind::MalformedFile, name + ": ragged row on line " + std::to_string(line_no));
    ++rows;
  }
  if (rows == 0) throw Error(ErrorKind::EmptySet, name + ": no rows");
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = values[static_cast<std::size_t>(i * cols + j)];
  return m;
}

}  // namespace

EmbeddingSet::EmbeddingSet(Matrix data, std::string label) : data_(std::move(data)), label_(std::move(label)) {
  if (data_.rows() == 0 || data_.cols() == 0) throw Error(ErrorKind::EmptySet, "embedding set has no entries");
  for (Eigen::Index i = 0; i < data_.rows(); ++i)
    for (Eigen::Index j = 0; j < data_.cols(); ++j)
      if (!std::isfinite(data_(i, j)))
        throw Error(ErrorKind::NonFiniteEntry, "row " + std::to_string(i) + ", column " + std::to_string(j));
}

EmbeddingFormat parse_format(std::string_view name) {
  if (name == "csv") return EmbeddingFormat::csv;
  if (name == "binary" || name == "bin") return EmbeddingFormat::binary;
  throw Error(ErrorKind::Usage, "unknown embedding format '" + std::string(name) + "'");
}

EmbeddingFormat format_from_extension(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".emb" || ext == ".bin" || ext == ".gram") return EmbeddingFormat::binary;
  return EmbeddingFormat::csv;
}

Matrix read_matrix_binary(const std::filesystem::path& path, std::string_view magic) {
  const std::string bytes = read_file(path);
  constexpr std::size_t header = 4 + 4 + 8 + 8;
  if (bytes.size() < header || std::string_view(bytes).substr(0, 4) != magic)
    throw Error(ErrorKind::MalformedFile, path.string() + ": bad magic, expected " + std::string(magic));
  if (read_le<std::uint32_t>(bytes, 4) != 1)
    throw Error(ErrorKind::MalformedFile, path.string() + ": unsupported version");
  const auto rows = read_le<std::uint64_t>(bytes, 8);
  const auto cols = read_le<std::uint64_t>(bytes, 16);
  if (rows == 0 || cols == 0) throw Error(ErrorKind::EmptySet, path.string() + ": empty matrix");
  if (cols > (bytes.size() - header) / 8 / rows || bytes.size() != header + rows * cols * 8)
    throw Error(ErrorKind::MalformedFile, path.string() + ": payload size does not match header");
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  std::size_t offset = header;
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j, offset += 8) {
      const double v = read_le<double>(bytes, offset);
      if (!std::isfinite(v))
        throw Error(ErrorKind::NonFiniteEntry, path.string() + ": row " + std::to_string(i) + ", column " +
                                                   std::to_string(j));
      m(i, j) = v;
    }
  return m;
}

void write_matrix_binary(const Matrix& m, const std::filesystem::path& path, std::string_view magic) {
  std::string out;
  out.reserve(24 + static_cast<std::size_t>(m.size()) * 8);
  out.append(magic.data(), 4);
  append_le<std::uint32_t>(out, 1);
  append_le<std::uint64_t>(out, static_cast<std::uint64_t>(m.rows()));
  append_le<std::uint64_t>(out, static_cast<std::uint64_t>(m.cols()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) append_le<double>(out, m(i, j));
  write_text_file(path, out);
}

EmbeddingSet load_embeddings(const std::filesystem::path& path, EmbeddingFormat format) {
  if (format == EmbeddingFormat::binary)
    return EmbeddingSet(read_matrix_binary(path, kEmbeddingMagic), path.filename().string());
  return EmbeddingSet(parse_csv(read_file(path), path.string()), path.filename().string());
}

void save_embeddings(const EmbeddingSet& set, const std::filesystem::path& path, EmbeddingFormat format) {
  if (format == EmbeddingFormat::binary) {
    write_matrix_binary(set.data(), path, kEmbeddingMagic);
    return;
  }
  std::string out;
  for (Eigen::Index i = 0; i < set.n(); ++i) {
    for (Eigen::Index j = 0; j < set.d(); ++j) {
      if (j) out += ',';
      std::array<char, 32> buf{};
      std::snprintf(buf.data(), buf.size(), "%.17g", set.data()(i, j));
      out += buf.data();
    }
    out += '\n';
  }
  write_text_file(path, out);
}

std::vector<Eigen::Index> sample_without_replacement(Eigen::Index n, Eigen::Index m, const RunSeed& seed) {
  if (m < 1) throw Error(ErrorKind::BadArguments, "subsample size must be >= 1");
  if (m > n) throw Error(ErrorKind::SizeTooLarge, "subsample size " + std::to_string(m) + " exceeds " + std::to_string(n));
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  Rng rng(seed);
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto j = i + static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n - i)));
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
  }
  idx.resize(static_cast<std::size_t>(m));
  return idx;
}

EmbeddingSet subsample(const EmbeddingSet& x, Eigen::Index m, const RunSeed& seed) {
  const auto idx = sample_without_replacement(x.n(), m, seed);
  Matrix out(m, x.d());
  for (Eigen::Index i = 0; i < m; ++i) out.row(i) = x.row(idx[static_cast<std::size_t>(i)]);
  return EmbeddingSet(std::move(out), x.label());
}

const char* to_string(RecordKind kind) noexcept {
  switch (kind) {
    case RecordKind::score: return "score";
    case RecordKind::curve: return "curve";
    case RecordKind::projection: return "projection";
    case RecordKind::guidance: return "guidance";
    case RecordKind::bias: return "bias";
  }
  return "score";
}

RecordKind parse_record_kind(std::string_view name) {
  for (auto k : {RecordKind::score, RecordKind::curve, RecordKind::projection, RecordKind::guidance, RecordKind::bias})
    if (name == to_string(k)) return k;
  throw Error(ErrorKind::MalformedFile, "unknown record kind '" + std::string(name) + "'");
}

Json ResultRecord::to_json() const {
  return Json{{"kind", to_string(kind)}, {"payload", payload}, {"config_hash", config_hash}, {"timestamp", timestamp}};
}

ResultRecord ResultRecord::from_json(const Json& j) {
  try {
    ResultRecord r;
    r.kind = parse_record_kind(j.at("kind").get<std::string>());
    r.payload = j.at("payload");
    r.config_hash = j.at("config_hash").get<std::string>();
    r.timestamp = j.at("timestamp").get<std::int64_t>();
    return r;
  } catch (const Json::exception& e) {
    throw Error(ErrorKind::MalformedFile, std::string("bad result record: ") + e.what());
  }
}

std::string canonical_dump(const Json& j) {
  std::string out;
  dump(j, out);
  return out;
}

std::string config_hash(const Json& config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : canonical_dump(config)) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::array<char, 17> buf{};
  std::snprintf(buf.data(), buf.size(), "%016llx", static_cast<unsigned long long>(h));
  return buf.data();
}

void save_record(const ResultRecord& record, const std::filesystem::path& path) {
  write_text_file(path, canonical_dump(record.to_json()) + "\n");
}

ResultRecord load_record(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::exception& e) {
    throw Error(ErrorKind::MalformedFile, path.string() + ": " + e.what());
  }
  return ResultRecord::from_json(j);
}

void write_plot_data(const std::filesystem::path& path, const std::vector<std::string>& columns,
                     const std::vector<std::vector<double>>& rows) {
  std::string out = "#";
  for (const auto& c : columns) out += " " + c;
  out += '\n';
  for (const auto& row : rows) {
    if (row.size() != columns.size()) throw Error(ErrorKind::DimensionMismatch, "plot row width");
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ' ';
      std::array<char, 32> buf{};
      std::snprintf(buf.data(), buf.size(), "%.17g", row[i]);
      out += buf.data();
    }
    out += '\n';
  }
  write_text_file(path, out);
}

void write_text_file(const std::filesystem::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::IoFailure, "cannot write " + path.string());
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  out.flush();
  if (!out) throw Error(ErrorKind::IoFailure, "write failed for " + path.string());
}

}  // namespace divkit
