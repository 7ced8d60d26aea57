#include "cumolos/checkpoint.hpp"

#include <array>
#include <cstdint>
#include <fstream>

#include "cumolos/errors.hpp"
#include "json_codec.hpp"

namespace cumolos {

namespace {

constexpr std::array<char, 4> kMagic = {'C', 'M', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;

void write_doubles(std::ostream& os, const double* data, std::size_t n) {
  os.write(reinterpret_cast<const char*>(data),
           static_cast<std::streamsize>(n * sizeof(double)));
}

void read_doubles(std::istream& is, double* data, std::size_t n) {
  is.read(reinterpret_cast<char*>(data),
          static_cast<std::streamsize>(n * sizeof(double)));
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt,
                     const std::filesystem::path& path) {
  codec::json header;
  header["model"] = codec::to_json(ckpt.model);
  header["curriculum"] = codec::to_json(ckpt.curriculum);
  header["training"] = codec::to_json(ckpt.training);
  header["norm_constant"] = ckpt.norm_constant;
  header["epoch"] = ckpt.epoch;
  header["adam_t"] = ckpt.adam_t;
  header["adam_state"] = !ckpt.adam_m.empty();
  const std::string hs = header.dump();

  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary);
    if (!os)
      throw IoError("checkpoint: cannot open for writing: " + tmp.string());
    os.write(kMagic.data(), kMagic.size());
    const std::uint32_t version = kVersion;
    os.write(reinterpret_cast<const char*>(&version), sizeof version);
    const auto hlen = static_cast<std::uint64_t>(hs.size());
    os.write(reinterpret_cast<const char*>(&hlen), sizeof hlen);
    os.write(hs.data(), static_cast<std::streamsize>(hs.size()));

    for (const auto& ref : parameter_refs(ckpt.params))
      write_doubles(os, ref.data, static_cast<std::size_t>(ref.size));
    if (!ckpt.adam_m.empty()) {
      write_doubles(os, ckpt.adam_m.data(), ckpt.adam_m.size());
      write_doubles(os, ckpt.adam_v.data(), ckpt.adam_v.size());
    }
    if (!os) throw IoError("checkpoint: write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("checkpoint: cannot open " + path.string());

  std::array<char, 4> magic{};
  is.read(magic.data(), magic.size());
  if (!is || magic != kMagic)
    throw StateError("checkpoint: bad magic in " + path.string());
  std::uint32_t version = 0;
  is.read(reinterpret_cast<char*>(&version), sizeof version);
  if (version != kVersion)
    throw StateError("checkpoint: unsupported version " +
                     std::to_string(version));
  std::uint64_t hlen = 0;
  is.read(reinterpret_cast<char*>(&hlen), sizeof hlen);
  std::string hs(hlen, '\0');
  is.read(hs.data(), static_cast<std::streamsize>(hlen));
  if (!is) throw StateError("checkpoint: truncated header");

  codec::json header;
  try {
    header = codec::json::parse(hs);
  } catch (const codec::json::exception& e) {
    throw StateError(std::string("checkpoint: corrupt header: ") + e.what());
  }

  Checkpoint ckpt;
  ckpt.model = codec::model_from_json(header.at("model"));
  ckpt.curriculum = codec::curriculum_from_json(header.at("curriculum"));
  ckpt.training = codec::train_from_json(header.at("training"));
  ckpt.norm_constant = header.at("norm_constant").get<double>();
  ckpt.epoch = header.at("epoch").get<int>();
  ckpt.adam_t = header.at("adam_t").get<std::int64_t>();

  ckpt.params = init_params(ckpt.model, 0);  // shapes only; overwritten below
  std::size_t total = 0;
  for (const auto& ref : parameter_refs(ckpt.params)) {
    read_doubles(is, ref.data, static_cast<std::size_t>(ref.size));
    total += static_cast<std::size_t>(ref.size);
  }
  if (header.at("adam_state").get<bool>()) {
    ckpt.adam_m.resize(total);
    ckpt.adam_v.resize(total);
    read_doubles(is, ckpt.adam_m.data(), total);
    read_doubles(is, ckpt.adam_v.data(), total);
  }
  if (!is) throw StateError("checkpoint: truncated parameter data");
  return ckpt;
}

}  // namespace cumolos
