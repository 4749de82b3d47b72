#include "feasopf/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "feasopf/errors.hpp"

namespace feasopf::nn {

namespace {

void put_u64(std::ostream& out, std::uint64_t v) {
  unsigned char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(bytes), 8);
}

std::uint64_t get_u64(std::istream& in) {
  unsigned char bytes[8];
  in.read(reinterpret_cast<char*>(bytes), 8);
  if (!in) throw IoError("checkpoint: truncated blob");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  return v;
}

}  // namespace

void write_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write checkpoint " + path);
  out << kCheckpointMagic << '\n' << ckpt.header.dump() << '\n';
  put_u64(out, ckpt.blob.size());
  for (double d : ckpt.blob) put_u64(out, std::bit_cast<std::uint64_t>(d));
  if (!out) throw IoError("failed writing checkpoint " + path);
}

Checkpoint read_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path);
  std::string magic, header;
  std::getline(in, magic);
  if (magic != kCheckpointMagic) throw ValidationError("checkpoint " + path + ": unrecognized format '" + magic + "'");
  std::getline(in, header);
  Checkpoint ckpt;
  try {
    ckpt.header = nlohmann::json::parse(header);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("checkpoint " + path + ": bad header: " + e.what());
  }
  const std::uint64_t count = get_u64(in);
  ckpt.blob.resize(count);
  for (auto& d : ckpt.blob) d = std::bit_cast<double>(get_u64(in));
  return ckpt;
}

}  // namespace feasopf::nn
