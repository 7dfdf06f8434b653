#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "i2c/bank.hpp"
#include "i2c/errors.hpp"
#include "i2c/io.hpp"
#include "i2c/model.hpp"

namespace i2c {

// Checkpoint layout (little-endian throughout):
//   magic "I2CK", u32 version = 1, u32 tensor count,
//   per tensor: u16 name length, name bytes, u8 rank, rank * u32 dims,
//               numel * f32 data,
//   bank section (see CenterBank::snapshot),
//   u32 CRC-32 of all preceding bytes.
// Tensor data is stored single-precision; training state stays double.
inline constexpr std::uint32_t kCheckpointVersion = 1;

inline std::vector<std::uint8_t> encode_checkpoint(const ModelParams& model,
                                                   const CenterBank& bank) {
    std::vector<std::uint8_t> out;
    put_bytes(out, "I2CK", 4);
    put_u32(out, kCheckpointVersion);
    put_u32(out, static_cast<std::uint32_t>(model.params.entries.size()));
    for (const auto& e : model.params.entries) {
        if (e.name.size() > 0xFFFF) throw UsageError("tensor name too long: " + e.name);
        put_u16(out, static_cast<std::uint16_t>(e.name.size()));
        put_bytes(out, e.name.data(), e.name.size());
        out.push_back(static_cast<std::uint8_t>(e.tensor.rank()));
        for (int d : e.tensor.shape) put_u32(out, static_cast<std::uint32_t>(d));
        for (double v : e.tensor.data) put_f32(out, static_cast<float>(v));
    }
    const auto bank_bytes = bank.snapshot();
    put_bytes(out, bank_bytes.data(), bank_bytes.size());
    put_u32(out, crc32(out));
    return out;
}

inline void save_checkpoint(const std::string& path, const ModelParams& model,
                            const CenterBank& bank) {
    write_file_bytes(path, encode_checkpoint(model, bank));
}

struct Checkpoint {
    ModelParams model;
    CenterBank bank;
};

// Parses and fully validates a checkpoint. The model config must match the
// stored tensor shapes; a mismatch is a configuration error, not a format
// error.
inline Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes,
                                    const ModelConfig& config, const std::string& source) {
    if (bytes.size() < 12 + 4) throw FormatError(source + ": too short to be a checkpoint");
    const std::uint32_t stored_crc =
        static_cast<std::uint32_t>(bytes[bytes.size() - 4]) |
        (static_cast<std::uint32_t>(bytes[bytes.size() - 3]) << 8) |
        (static_cast<std::uint32_t>(bytes[bytes.size() - 2]) << 16) |
        (static_cast<std::uint32_t>(bytes[bytes.size() - 1]) << 24);
    if (crc32(bytes.data(), bytes.size() - 4) != stored_crc)
        throw FormatError(source + ": CRC mismatch at offset " + std::to_string(bytes.size() - 4));

    ByteReader rd(bytes.data(), bytes.size() - 4, source);
    if (rd.str(4) != "I2CK") throw FormatError(source + ": bad magic at offset 0");
    const std::uint32_t version = rd.u32();
    if (version != kCheckpointVersion)
        throw FormatError(source + ": unsupported version " + std::to_string(version));
    const std::uint32_t count = rd.u32();

    ModelParams fresh = init_model(config, 0);  // shape template for validation
    if (count != fresh.params.entries.size())
        throw ConfigError(source + ": checkpoint holds " + std::to_string(count) +
                          " tensors but the model config expects " +
                          std::to_string(fresh.params.entries.size()));
    for (std::uint32_t t = 0; t < count; ++t) {
        const std::uint16_t name_len = rd.u16();
        const std::string name = rd.str(name_len);
        auto& expect = fresh.params.entries[t];
        if (name != expect.name)
            throw ConfigError(source + ": tensor " + std::to_string(t) + " is '" + name +
                              "', expected '" + expect.name + "'");
        const std::uint8_t rank = rd.u8();
        if (rank != static_cast<std::uint8_t>(expect.tensor.rank()))
            throw ConfigError(source + ": tensor '" + name + "' rank mismatch");
        Shape shape(rank);
        for (auto& d : shape) d = static_cast<int>(rd.u32());
        if (shape != expect.tensor.shape)
            throw ConfigError(source + ": tensor '" + name + "' has shape " + shape_str(shape) +
                              ", config expects " + shape_str(expect.tensor.shape));
        for (double& v : expect.tensor.data) v = static_cast<double>(rd.f32());
    }

    // the bank section is self-sizing: header, then Y rows of (D*f32 + u64)
    const std::size_t bank_start = rd.offset();
    if (rd.remaining() < 16) throw FormatError(source + ": bank header truncated");
    const std::uint32_t bank_y = rd.u32();
    const std::uint32_t bank_d = rd.u32();
    rd.u64();  // alpha bits, validated by CenterBank::restore
    const std::size_t bank_size =
        16 + static_cast<std::size_t>(bank_y) * (4u * bank_d + 8u);
    if (bytes.size() - 4 - bank_start != bank_size)
        throw FormatError(source + ": bank section size mismatch at offset " +
                          std::to_string(bank_start));
    std::vector<std::uint8_t> bank_bytes(bytes.begin() + static_cast<std::ptrdiff_t>(bank_start),
                                         bytes.begin() +
                                             static_cast<std::ptrdiff_t>(bank_start + bank_size));
    CenterBank bank = CenterBank::restore(bank_bytes);
    if (bank.num_classes() != config.num_classes || bank.dim() != config.feature_channels)
        throw ConfigError(source + ": bank is " + std::to_string(bank.num_classes()) + "x" +
                          std::to_string(bank.dim()) + ", config expects " +
                          std::to_string(config.num_classes) + "x" +
                          std::to_string(config.feature_channels));
    return Checkpoint{std::move(fresh), std::move(bank)};
}

inline Checkpoint load_checkpoint(const std::string& path, const ModelConfig& config) {
    return decode_checkpoint(read_file_bytes(path), config, path);
}

}  // namespace i2c
