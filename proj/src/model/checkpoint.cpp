#include "carca/model/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "carca/error.hpp"

namespace carca::model {
namespace {

constexpr std::array<char, 8> kMagic{'C', 'A', 'R', 'C', 'A', 'C', 'K', 'P'};
constexpr std::uint64_t kMaxTensorScalars = std::uint64_t{1} << 34;

template <typename U>
void put_le(std::ostream& out, U value) {
  std::array<char, sizeof(U)> bytes;
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    bytes[i] = static_cast<char>((value >> (8 * i)) & 0xFF);
  }
  out.write(bytes.data(), bytes.size());
}

template <typename U>
U get_le(std::istream& in) {
  std::array<unsigned char, sizeof(U)> bytes;
  if (!in.read(reinterpret_cast<char*>(bytes.data()), bytes.size())) {
    throw CheckpointError("checkpoint truncated");
  }
  U value = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) value |= static_cast<U>(bytes[i]) << (8 * i);
  return value;
}

void put_u8(std::ostream& out, std::uint8_t v) { out.put(static_cast<char>(v)); }
std::uint8_t get_u8(std::istream& in) { return get_le<std::uint8_t>(in); }
void put_u64(std::ostream& out, std::uint64_t v) { put_le(out, v); }
std::uint64_t get_u64(std::istream& in) { return get_le<std::uint64_t>(in); }
void put_f64(std::ostream& out, double v) { put_le(out, std::bit_cast<std::uint64_t>(v)); }
double get_f64(std::istream& in) { return std::bit_cast<double>(get_le<std::uint64_t>(in)); }

template <typename E>
E get_enum(std::istream& in, std::uint8_t count, const char* what) {
  const std::uint8_t raw = get_u8(in);
  if (raw >= count) throw CheckpointError(std::string("checkpoint has invalid ") + what);
  return static_cast<E>(raw);
}

}  // namespace

void write_checkpoint(std::ostream& out, const Checkpoint& ckp) {
  const HyperParams& hp = ckp.hp;
  out.write(kMagic.data(), kMagic.size());
  put_le(out, kCheckpointVersion);
  for (std::size_t v : {hp.d, hp.g, hp.heads, hp.blocks, hp.max_len, hp.output_blocks}) put_u64(out, v);
  for (double v : {hp.dropout, hp.l2_weight, hp.lr, hp.leaky_slope}) put_f64(out, v);
  put_u8(out, static_cast<std::uint8_t>(hp.residual));
  put_u8(out, static_cast<std::uint8_t>(hp.scoring));
  put_u8(out, static_cast<std::uint8_t>(hp.positional));
  put_u8(out, static_cast<std::uint8_t>(hp.layout));
  put_u8(out, static_cast<std::uint8_t>(hp.target_mode));
  put_u8(out, hp.ca_residual ? 1 : 0);
  put_u64(out, ckp.shape.item_count);
  put_u64(out, ckp.shape.attr_dim);
  put_u64(out, ckp.shape.ctx_dim);

  put_u64(out, ckp.params.size());
  for (const auto& p : ckp.params) {
    put_le(out, static_cast<std::uint32_t>(p.name.size()));
    out.write(p.name.data(), static_cast<std::streamsize>(p.name.size()));
    put_u8(out, p.is_weight ? 1 : 0);
    put_u64(out, p.value.rows());
    put_u64(out, p.value.cols());
    for (double v : p.value.data()) put_f64(out, v);
  }
  if (!out) throw CheckpointError("failed writing checkpoint");
}

Checkpoint read_checkpoint(std::istream& in) {
  std::array<char, 8> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic) {
    throw CheckpointError("not a checkpoint file (bad magic)");
  }
  const auto version = get_le<std::uint32_t>(in);
  if (version != kCheckpointVersion) {
    throw CheckpointError("checkpoint version " + std::to_string(version) + " is not supported (expected " +
                          std::to_string(kCheckpointVersion) + ")");
  }
  Checkpoint ckp;
  HyperParams& hp = ckp.hp;
  for (std::size_t* v : {&hp.d, &hp.g, &hp.heads, &hp.blocks, &hp.max_len, &hp.output_blocks}) {
    *v = get_u64(in);
  }
  for (double* v : {&hp.dropout, &hp.l2_weight, &hp.lr, &hp.leaky_slope}) *v = get_f64(in);
  hp.residual = get_enum<ResidualMode>(in, 2, "residual mode");
  hp.scoring = get_enum<ScoringMode>(in, 2, "scoring mode");
  hp.positional = get_enum<PositionalMode>(in, 3, "positional mode");
  hp.layout = get_enum<FeatureLayout>(in, 3, "feature layout");
  hp.target_mode = get_enum<TargetMode>(in, 2, "target mode");
  hp.ca_residual = get_u8(in) != 0;
  ckp.shape.item_count = get_u64(in);
  ckp.shape.attr_dim = get_u64(in);
  ckp.shape.ctx_dim = get_u64(in);

  const std::uint64_t count = get_u64(in);
  for (std::uint64_t t = 0; t < count; ++t) {
    const auto name_len = get_le<std::uint32_t>(in);
    if (name_len > 4096) throw CheckpointError("checkpoint tensor name too long");
    std::string name(name_len, '\0');
    if (!in.read(name.data(), name_len)) throw CheckpointError("checkpoint truncated");
    const bool is_weight = get_u8(in) != 0;
    const std::uint64_t rows = get_u64(in);
    const std::uint64_t cols = get_u64(in);
    if (cols != 0 && rows > kMaxTensorScalars / cols) {
      throw CheckpointError("checkpoint tensor '" + name + "' is implausibly large");
    }
    numerics::Matrix m(rows, cols);
    for (double& v : m.data()) v = get_f64(in);
    ckp.params.add(std::move(name), std::move(m), is_weight);
  }
  return ckp;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckp) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError("cannot open " + path.string() + " for writing");
  write_checkpoint(out, ckp);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint " + path.string());
  return read_checkpoint(in);
}

ModelParams load_params_for(const std::filesystem::path& path, const CarcaModel& model) {
  Checkpoint ckp = load_checkpoint(path);
  if (!(ckp.hp == model.hyper_params())) {
    throw CheckpointError("checkpoint " + path.string() + " was trained with different hyper-parameters");
  }
  if (!(ckp.shape == model.shape())) {
    throw CheckpointError("checkpoint " + path.string() + " was trained for a different dataset shape");
  }
  model.check_params(ckp.params);
  return std::move(ckp.params);
}

}  // namespace carca::model
