#include "frbmed/replicate_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "frbmed/error.hpp"

namespace frbmed {

static_assert(std::endian::native == std::endian::little,
              "replicate files are written in native little-endian order");

namespace {

constexpr char kMagic[8] = {'F', 'R', 'B', 'M', 'R', 'E', 'P', '\0'};

template <typename T>
void put(std::string& out, T value) {
  char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  out.append(buf, sizeof(T));
}

void put_matrix(std::string& out, const Matrix& m) {
  put<std::uint64_t>(out, static_cast<std::uint64_t>(m.rows()));
  put<std::uint64_t>(out, static_cast<std::uint64_t>(m.cols()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) put<double>(out, m(r, c));
  }
}

[[noreturn]] void corrupt(const std::string& what) {
  fail(ErrorKind::CorruptFile, "CorruptFile: " + what);
}

class Reader {
 public:
  Reader(const std::string& bytes, std::size_t end) : bytes_(bytes), end_(end) {}

  template <typename T>
  T get() {
    if (end_ - pos_ < sizeof(T)) corrupt("unexpected end of data");
    T value;
    std::memcpy(&value, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return value;
  }

  std::string get_bytes(std::uint64_t n) {
    if (end_ - pos_ < n) corrupt("unexpected end of data");
    std::string s = bytes_.substr(pos_, static_cast<std::size_t>(n));
    pos_ += static_cast<std::size_t>(n);
    return s;
  }

  Matrix get_matrix() {
    const auto rows = get<std::uint64_t>();
    const auto cols = get<std::uint64_t>();
    if (cols != 0 && rows > (end_ - pos_) / sizeof(double) / cols) corrupt("matrix block too large");
    Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = get<double>();
    }
    return m;
  }

  bool done() const { return pos_ == end_; }

 private:
  const std::string& bytes_;
  std::size_t end_;
  std::size_t pos_ = 0;
};

nlohmann::json config_json(const BootstrapConfig& cfg) {
  return {{"R", cfg.R},
          {"level", cfg.level},
          {"ci_type", to_string(cfg.ci_type)},
          {"contrast", to_string(cfg.contrast)},
          {"contrast_labels", cfg.contrast_labels},
          {"jackknife", cfg.jackknife},
          {"seed", cfg.seed}};
}

BootstrapConfig config_from(const nlohmann::json& j) {
  BootstrapConfig cfg;
  cfg.R = j.at("R").get<std::size_t>();
  cfg.level = j.at("level").get<double>();
  cfg.ci_type = ci_type_from_string(j.at("ci_type").get<std::string>());
  cfg.contrast = contrast_mode_from_string(j.at("contrast").get<std::string>());
  cfg.contrast_labels = j.at("contrast_labels").get<std::vector<std::string>>();
  cfg.jackknife = j.at("jackknife").get<bool>();
  cfg.seed = j.at("seed").get<std::uint64_t>();
  return cfg;
}

}  // namespace

std::uint64_t fnv1a64(const void* data, std::size_t size, std::uint64_t hash) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < size; ++i) {
    hash ^= p[i];
    hash *= 0x100000001B3ULL;
  }
  return hash;
}

std::uint64_t model_hash(const ModelSpec& spec) {
  const std::string text = render_formula(spec);
  return fnv1a64(text.data(), text.size());
}

std::string encode_replicates(const BootstrapResult& result) {
  const auto base = static_cast<Eigen::Index>(result.fit.labels.size());
  nlohmann::json header;
  header["seed"] = result.config.seed;
  header["R"] = result.config.R;
  auto labels = nlohmann::json::array();
  for (const auto& l : result.fit.labels) labels.push_back(l.name);
  header["labels"] = std::move(labels);
  header["method"] = to_string(result.fit.method);
  header["model_hash"] = model_hash(result.fit.spec);
  header["config"] = config_json(result.config);
  header["discarded"] = result.discarded;
  header["redrawn"] = result.redrawn;
  header["fit"] = fit_to_json(result.fit, true);
  const std::string text = header.dump();

  std::string out(kMagic, sizeof kMagic);
  put<std::uint16_t>(out, kReplicateFormatMajor);
  put<std::uint16_t>(out, kReplicateFormatMinor);
  put<std::uint64_t>(out, text.size());
  out += text;
  put_matrix(out, result.replicates.leftCols(base));
  put<std::uint64_t>(out, result.coefficient_replicates.size());
  for (const auto& m : result.coefficient_replicates) put_matrix(out, m);
  const Matrix jack = result.jackknife.cols() > base ? Matrix(result.jackknife.leftCols(base))
                                                     : result.jackknife;
  put_matrix(out, jack);
  put<std::uint64_t>(out, fnv1a64(out.data(), out.size()));
  return out;
}

BootstrapResult decode_replicates(const std::string& bytes) {
  if (bytes.size() < sizeof kMagic + 4 || std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0) {
    corrupt("not a replicate file");
  }
  std::uint16_t major = 0;
  std::uint16_t minor = 0;
  std::memcpy(&major, bytes.data() + 8, 2);
  std::memcpy(&minor, bytes.data() + 10, 2);
  if (major != kReplicateFormatMajor) {
    fail(ErrorKind::VersionMismatch,
         "VersionMismatch: replicate file version " + std::to_string(major) + "." +
             std::to_string(minor) + ", this build reads version " +
             std::to_string(kReplicateFormatMajor) + ".x");
  }
  if (bytes.size() < sizeof kMagic + 4 + 8) corrupt("file truncated");
  const std::size_t body = bytes.size() - 8;
  std::uint64_t stored = 0;
  std::memcpy(&stored, bytes.data() + body, 8);
  if (stored != fnv1a64(bytes.data(), body)) corrupt("checksum mismatch");

  Reader in(bytes, body);
  in.get_bytes(sizeof kMagic + 4);
  BootstrapResult result;
  try {
    const auto len = in.get<std::uint64_t>();
    const auto header = nlohmann::json::parse(in.get_bytes(len));
    result.config = config_from(header.at("config"));
    result.fit = fit_from_json(header.at("fit"));
    result.discarded = header.at("discarded").get<std::size_t>();
    result.redrawn = header.at("redrawn").get<std::size_t>();
    if (header.at("model_hash").get<std::uint64_t>() != model_hash(result.fit.spec)) {
      corrupt("model hash does not match the stored model");
    }
    const auto names = header.at("labels").get<std::vector<std::string>>();
    if (names.size() != result.fit.labels.size()) corrupt("effect labels do not match the model");
    for (std::size_t i = 0; i < names.size(); ++i) {
      if (names[i] != result.fit.labels[i].name) corrupt("effect labels do not match the model");
    }
  } catch (const nlohmann::json::exception& e) {
    corrupt(std::string("bad header: ") + e.what());
  }
  result.replicates = in.get_matrix();
  const auto eqs = in.get<std::uint64_t>();
  if (eqs != result.fit.equations.size()) corrupt("equation count does not match the model");
  for (std::uint64_t e = 0; e < eqs; ++e) result.coefficient_replicates.push_back(in.get_matrix());
  result.jackknife = in.get_matrix();
  if (!in.done()) corrupt("trailing bytes");
  if (static_cast<std::size_t>(result.replicates.cols()) != result.fit.labels.size()) {
    corrupt("replicate matrix does not match the effect labels");
  }
  if (result.replicates.rows() == 0) {
    fail(ErrorKind::MissingReplicates, "MissingReplicates: file holds no replicates");
  }
  analyze(result);
  return result;
}

void save_replicates(const BootstrapResult& result, const std::string& path) {
  const std::string bytes = encode_replicates(result);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::IoError, "IoError: cannot write '" + path + "'");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorKind::IoError, "IoError: write to '" + path + "' failed");
}

BootstrapResult load_replicates(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::IoError, "IoError: cannot open '" + path + "'");
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_replicates(bytes);
}

}  // namespace frbmed
