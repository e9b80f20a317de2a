// SPDX-License-Identifier: Apache-2.0
#include "slao/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>

#include "slao/errors.hpp"

namespace slao {

namespace {

constexpr char kMagic[4] = {'S', 'L', 'A', 'O'};

void put_bytes(std::string& out, std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

class Reader {
public:
    explicit Reader(std::string bytes) : bytes_(std::move(bytes)) {}

    std::uint64_t take(int n) {
        if (pos_ + static_cast<std::size_t>(n) > bytes_.size()) {
            throw CorruptionError("checkpoint truncated at byte " + std::to_string(pos_));
        }
        std::uint64_t v = 0;
        for (int i = 0; i < n; ++i) {
            v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
        }
        pos_ += static_cast<std::size_t>(n);
        return v;
    }

    std::string take_string(std::size_t n) {
        if (pos_ + n > bytes_.size()) {
            throw CorruptionError("checkpoint truncated inside a tensor name");
        }
        std::string s = bytes_.substr(pos_, n);
        pos_ += n;
        return s;
    }

    bool exhausted() const { return pos_ == bytes_.size(); }

private:
    std::string bytes_;
    std::size_t pos_ = 0;
};

}  // namespace

void save_checkpoint(const std::string& path, const std::vector<NamedTensor>& tensors) {
    std::string out;
    out.append(kMagic, sizeof(kMagic));
    put_bytes(out, kCheckpointVersion, 4);
    put_bytes(out, tensors.size(), 4);
    for (const NamedTensor& t : tensors) {
        if (t.name.size() > std::numeric_limits<std::uint16_t>::max()) {
            throw ValidationError("save_checkpoint: tensor name too long");
        }
        put_bytes(out, t.name.size(), 2);
        out.append(t.name);
        put_bytes(out, static_cast<std::uint64_t>(t.value.rows), 8);
        put_bytes(out, static_cast<std::uint64_t>(t.value.cols), 8);
        for (double d : t.value.data) put_bytes(out, std::bit_cast<std::uint64_t>(d), 8);
    }

    std::ofstream file(path, std::ios::binary | std::ios::trunc);
    if (!file) throw IoError("save_checkpoint: cannot open '" + path + "' for writing");
    file.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!file) throw IoError("save_checkpoint: write to '" + path + "' failed");
}

std::vector<NamedTensor> load_checkpoint(const std::string& path) {
    std::ifstream file(path, std::ios::binary);
    if (!file) throw IoError("load_checkpoint: cannot open '" + path + "'");
    std::string bytes((std::istreambuf_iterator<char>(file)), std::istreambuf_iterator<char>());

    Reader reader(std::move(bytes));
    char magic[4];
    for (char& c : magic) c = static_cast<char>(reader.take(1));
    if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
        throw FormatError("load_checkpoint: bad magic bytes");
    }
    const std::uint64_t version = reader.take(4);
    if (version != kCheckpointVersion) {
        throw FormatError("load_checkpoint: unsupported format version " + std::to_string(version));
    }
    const std::uint64_t count = reader.take(4);

    std::vector<NamedTensor> tensors;
    tensors.reserve(count);
    for (std::uint64_t k = 0; k < count; ++k) {
        NamedTensor t;
        const std::uint64_t name_len = reader.take(2);
        t.name = reader.take_string(name_len);
        const std::uint64_t rows = reader.take(8);
        const std::uint64_t cols = reader.take(8);
        if (rows > (1u << 20) || cols > (1u << 20)) {
            throw CorruptionError("load_checkpoint: implausible tensor shape");
        }
        t.value = Matrix(static_cast<int>(rows), static_cast<int>(cols));
        for (double& d : t.value.data) d = std::bit_cast<double>(reader.take(8));
        tensors.push_back(std::move(t));
    }
    if (!reader.exhausted()) throw CorruptionError("load_checkpoint: trailing bytes after last tensor");
    return tensors;
}

}  // namespace slao
