#include "metaradar/dataset.hpp"

#include "metaradar/clutter.hpp"
#include "metaradar/error.hpp"
#include "metaradar/parallel.hpp"

#include <Eigen/Eigenvalues>

#include <fcntl.h>
#include <sys/mman.h>
#include <sys/stat.h>
#include <unistd.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <stdexcept>

static_assert(std::endian::native == std::endian::little,
              "dataset records are stored as native little-endian doubles");

namespace metaradar {

namespace {

constexpr char kMagic[5] = {'R', 'M', 'D', 'S', '1'};
constexpr std::size_t kChunk = 4096;

std::size_t record_size(int chips) { return 2 * static_cast<std::size_t>(chips) * sizeof(double) + 1; }

}  // namespace

// Record bytes either owned or mapped from a file.
class Dataset::Storage {
 public:
  Storage(std::size_t count, std::size_t stride) : count_(count), stride_(stride), owned_(count * stride) {
    bytes_ = owned_.data();
  }
  Storage(const Storage&) = delete;
  Storage& operator=(const Storage&) = delete;

  static std::shared_ptr<Storage> map(const std::filesystem::path& path, std::size_t offset, std::size_t count,
                                      std::size_t stride) {
    auto s = std::shared_ptr<Storage>(new Storage(count, stride, MappedTag{}));
    const int fd = ::open(path.c_str(), O_RDONLY);
    if (fd < 0) throw std::runtime_error("cannot open dataset for mapping: " + path.string());
    s->map_len_ = offset + count * stride;
    void* p = ::mmap(nullptr, s->map_len_, PROT_READ, MAP_SHARED, fd, 0);
    ::close(fd);
    if (p == MAP_FAILED) throw std::runtime_error("mmap failed for dataset: " + path.string());
    s->map_base_ = p;
    s->bytes_ = static_cast<std::byte*>(p) + offset;
    return s;
  }

  ~Storage() {
    if (map_base_ != nullptr) ::munmap(map_base_, map_len_);
  }

  [[nodiscard]] std::size_t count() const noexcept { return count_; }
  [[nodiscard]] std::size_t stride() const noexcept { return stride_; }
  [[nodiscard]] const std::byte* record(std::size_t i) const noexcept { return bytes_ + i * stride_; }
  [[nodiscard]] std::byte* mutable_record(std::size_t i) noexcept { return owned_.data() + i * stride_; }
  [[nodiscard]] std::span<const std::byte> all() const noexcept { return {bytes_, count_ * stride_}; }
  [[nodiscard]] std::span<std::byte> owned() noexcept { return owned_; }

 private:
  struct MappedTag {};
  Storage(std::size_t count, std::size_t stride, MappedTag) : count_(count), stride_(stride) {}

  std::size_t count_ = 0;
  std::size_t stride_ = 0;
  std::vector<std::byte> owned_;
  const std::byte* bytes_ = nullptr;
  void* map_base_ = nullptr;
  std::size_t map_len_ = 0;
};

namespace {

void encode(const LabeledSample& s, std::byte* dst) {
  const std::size_t k = static_cast<std::size_t>(s.z.size());
  for (std::size_t i = 0; i < k; ++i) {
    const double re = s.z(static_cast<Eigen::Index>(i)).real();
    const double im = s.z(static_cast<Eigen::Index>(i)).imag();
    std::memcpy(dst + (2 * i) * sizeof(double), &re, sizeof(double));
    std::memcpy(dst + (2 * i + 1) * sizeof(double), &im, sizeof(double));
  }
  dst[2 * k * sizeof(double)] = static_cast<std::byte>(s.label);
}

}  // namespace

Dataset::Dataset(int chips, std::string env_label, std::uint64_t seed, std::shared_ptr<const Storage> storage)
    : chips_(chips), env_label_(std::move(env_label)), seed_(seed), storage_(std::move(storage)) {
  if (chips_ < 1) throw std::invalid_argument("Dataset: chip count must be positive");
  if (storage_ && storage_->stride() != record_size(chips_)) {
    throw std::invalid_argument("Dataset: storage stride does not match chip count");
  }
}

Dataset Dataset::from_samples(int chips, std::string env_label, std::uint64_t seed,
                              std::span<const LabeledSample> samples) {
  auto storage = std::make_shared<Storage>(samples.size(), record_size(chips));
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (samples[i].z.size() != chips) throw std::invalid_argument("Dataset: sample dimension mismatch");
    if (samples[i].label != 0 && samples[i].label != 1) throw std::invalid_argument("Dataset: label must be 0 or 1");
    encode(samples[i], storage->mutable_record(i));
  }
  return Dataset(chips, std::move(env_label), seed, std::move(storage));
}

std::size_t Dataset::size() const noexcept { return storage_ ? storage_->count() : 0; }

int Dataset::label(std::size_t i) const {
  if (i >= size()) throw std::out_of_range("Dataset: sample index out of range");
  return static_cast<int>(storage_->record(i)[storage_->stride() - 1]);
}

void Dataset::load_interleaved(std::size_t i, std::span<double> out) const {
  if (i >= size()) throw std::out_of_range("Dataset: sample index out of range");
  if (out.size() != 2 * static_cast<std::size_t>(chips_)) {
    throw std::invalid_argument("Dataset: output buffer must hold 2K doubles");
  }
  std::memcpy(out.data(), storage_->record(i), out.size() * sizeof(double));
}

LabeledSample Dataset::sample(std::size_t i) const {
  std::vector<double> buf(2 * static_cast<std::size_t>(chips_));
  load_interleaved(i, buf);
  LabeledSample s;
  s.z.resize(chips_);
  for (int k = 0; k < chips_; ++k) s.z(k) = {buf[2 * k], buf[2 * k + 1]};
  s.label = label(i);
  return s;
}

std::size_t Dataset::count_label(int which) const {
  std::size_t n = 0;
  for (std::size_t i = 0; i < size(); ++i) n += label(i) == which ? 1 : 0;
  return n;
}

std::span<const std::byte> Dataset::records() const noexcept {
  return storage_ ? storage_->all() : std::span<const std::byte>{};
}

SampleGenerator::SampleGenerator(EnvironmentSpec env, Waveform y) : env_(std::move(env)), y_(std::move(y)) {
  env_.validate();
  // Eigen-decomposition square root; tolerates singular (e.g. noise-free) covariances.
  const HermitianMatrix cov = noise_cov(env_, y_.size());
  Eigen::SelfAdjointEigenSolver<CMatrix> eig(cov.matrix());
  if (eig.info() != Eigen::Success) throw NumericError("SampleGenerator: noise covariance decomposition failed");
  const Eigen::VectorXd root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  noise_factor_ = eig.eigenvectors() * root.asDiagonal();
}

LabeledSample SampleGenerator::draw(int hypothesis, Rng& rng) const {
  if (hypothesis != 0 && hypothesis != 1) throw std::invalid_argument("generate_sample: hypothesis must be 0 or 1");
  const int k = y_.size();
  std::normal_distribution<double> gauss(0.0, std::sqrt(0.5));

  LabeledSample s;
  s.label = hypothesis;
  s.z = generate_clutter(y_, env_.shape, env_.median, rng);

  CVector white(k);
  for (int i = 0; i < k; ++i) white(i) = {gauss(rng), gauss(rng)};
  s.z.noalias() += noise_factor_ * white;

  if (hypothesis == 1) {
    const cdouble alpha = std::sqrt(kTargetPower) * cdouble(gauss(rng), gauss(rng));
    s.z += alpha * y_.chips();
  }
  return s;
}

LabeledSample generate_sample(const EnvironmentSpec& env, const Waveform& y, int hypothesis, Rng& rng) {
  return SampleGenerator(env, y).draw(hypothesis, rng);
}

namespace {

// Sample i uses chunk stream i / kChunk, so output is independent of threading.
Dataset generate_labeled(const EnvironmentSpec& env, const Waveform& y, const std::vector<std::uint8_t>& labels,
                         std::uint64_t seed) {
  const SampleGenerator gen(env, y);
  const std::size_t count = labels.size();
  auto storage = std::make_shared<Dataset::Storage>(count, record_size(y.size()));
  const std::size_t chunks = (count + kChunk - 1) / kChunk;
  parallel_for(chunks, [&](std::size_t c) {
    Rng rng = make_rng(seed, c + 1);
    const std::size_t end = std::min(count, (c + 1) * kChunk);
    for (std::size_t i = c * kChunk; i < end; ++i) {
      encode(gen.draw(labels[i], rng), storage->mutable_record(i));
    }
  });
  return Dataset(y.size(), env.label, seed, std::move(storage));
}

}  // namespace

Dataset generate_dataset(const EnvironmentSpec& env, const Waveform& y, std::size_t count, std::uint64_t seed) {
  if (count < 2 || count % 2 != 0) {
    throw std::invalid_argument("generate_dataset: sample count must be even and >= 2");
  }
  std::vector<std::uint8_t> labels(count, 0);
  std::fill(labels.begin() + static_cast<std::ptrdiff_t>(count / 2), labels.end(), 1);
  Rng shuffle_rng = make_rng(seed, 0);
  std::shuffle(labels.begin(), labels.end(), shuffle_rng);
  return generate_labeled(env, y, labels, seed);
}

Dataset generate_pool(const EnvironmentSpec& env, const Waveform& y, int hypothesis, std::size_t count,
                      std::uint64_t seed) {
  if (hypothesis != 0 && hypothesis != 1) throw std::invalid_argument("generate_pool: hypothesis must be 0 or 1");
  if (count == 0) throw std::invalid_argument("generate_pool: count must be positive");
  return generate_labeled(env, y, std::vector<std::uint8_t>(count, static_cast<std::uint8_t>(hypothesis)), seed);
}

namespace {

template <typename T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T get(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!is) throw FormatError("dataset header truncated");
  return v;
}

}  // namespace

void write_dataset(const std::filesystem::path& path, const Dataset& data) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot write dataset: " + path.string());
    os.write(kMagic, sizeof kMagic);
    put<std::uint32_t>(os, static_cast<std::uint32_t>(data.chips()));
    put<std::uint64_t>(os, data.size());
    put<std::uint32_t>(os, static_cast<std::uint32_t>(data.env_label().size()));
    os.write(data.env_label().data(), static_cast<std::streamsize>(data.env_label().size()));
    put<std::uint64_t>(os, data.seed());
    const auto rec = data.records();
    os.write(reinterpret_cast<const char*>(rec.data()), static_cast<std::streamsize>(rec.size()));
    if (!os) throw std::runtime_error("short write on dataset: " + path.string());
  }
  std::filesystem::rename(tmp, path);
}

Dataset read_dataset(const std::filesystem::path& path, LoadMode mode) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw MissingPrerequisite("dataset file not found: " + path.string());
  char magic[sizeof kMagic];
  is.read(magic, sizeof magic);
  if (!is || std::memcmp(magic, kMagic, sizeof kMagic) != 0) {
    throw FormatError("not a dataset file (bad magic): " + path.string());
  }
  const auto chips = static_cast<int>(get<std::uint32_t>(is));
  const auto count = get<std::uint64_t>(is);
  const auto label_len = get<std::uint32_t>(is);
  std::string label(label_len, '\0');
  is.read(label.data(), label_len);
  const auto seed = get<std::uint64_t>(is);
  if (!is || chips < 1) throw FormatError("dataset header corrupt: " + path.string());

  const auto offset = static_cast<std::size_t>(is.tellg());
  const std::size_t stride = record_size(chips);
  const auto file_size = std::filesystem::file_size(path);
  if (file_size != offset + count * stride) {
    throw FormatError("dataset size does not match header: " + path.string());
  }

  if (mode == LoadMode::kMapped) {
    return Dataset(chips, std::move(label), seed, Dataset::Storage::map(path, offset, count, stride));
  }
  auto storage = std::make_shared<Dataset::Storage>(count, stride);
  auto bytes = storage->owned();
  is.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!is) throw FormatError("dataset records truncated: " + path.string());
  return Dataset(chips, std::move(label), seed, std::move(storage));
}

std::filesystem::path manifest_path(const std::filesystem::path& dataset_path) {
  auto p = dataset_path;
  p.replace_extension(".json");
  return p;
}

void write_dataset_with_manifest(const std::filesystem::path& path, const Dataset& data, const EnvironmentSpec& env,
                                 const nlohmann::json& extra) {
  write_dataset(path, data);
  nlohmann::json manifest = extra.is_object() ? extra : nlohmann::json::object();
  manifest["file"] = path.filename().string();
  manifest["environment"] = env;
  manifest["chips"] = data.chips();
  manifest["count"] = data.size();
  manifest["seed"] = data.seed();
  manifest["count_h0"] = data.count_label(0);
  manifest["count_h1"] = data.count_label(1);
  std::ofstream os(manifest_path(path));
  os << manifest.dump(2) << '\n';
  if (!os) throw std::runtime_error("cannot write manifest for " + path.string());
}

}  // namespace metaradar
