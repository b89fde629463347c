#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "uda/errors.hpp"
#include "uda/trainer.hpp"

namespace uda {

namespace {

constexpr char kMagic[4] = {'U', 'D', 'A', 'M'};

template <typename T>
void put(std::string& out, T value) {
    static_assert(std::endian::native == std::endian::little, "model files are little-endian");
    char buf[sizeof(T)];
    std::memcpy(buf, &value, sizeof(T));
    out.append(buf, sizeof(T));
}

class Reader {
public:
    explicit Reader(const std::string& bytes) : bytes_(bytes) {}

    template <typename T>
    T get() {
        if (pos_ + sizeof(T) > bytes_.size()) throw std::runtime_error("model file truncated");
        T value;
        std::memcpy(&value, bytes_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return value;
    }
    bool done() const { return pos_ == bytes_.size(); }

private:
    const std::string& bytes_;
    std::size_t pos_ = 0;
};

}  // namespace

std::string serialize_model(const EncoderState& state) {
    state.validate();
    std::string out(kMagic, sizeof(kMagic));
    put<std::uint8_t>(out, kModelVersion);
    put<std::uint8_t>(out, static_cast<std::uint8_t>(state.activation));
    put<std::uint8_t>(out, state.normalize ? 1 : 0);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(state.layers.size()));
    for (const Layer& l : state.layers) {
        put<std::uint32_t>(out, static_cast<std::uint32_t>(l.weight.rows));
        put<std::uint32_t>(out, static_cast<std::uint32_t>(l.weight.cols));
        for (double w : l.weight.data) put<double>(out, w);
        for (double b : l.bias) put<double>(out, b);
    }
    return out;
}

EncoderState deserialize_model(const std::string& bytes) {
    if (bytes.size() < sizeof(kMagic) || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
        throw std::runtime_error("not a model file (bad magic)");
    }
    Reader r(bytes);
    for (std::size_t i = 0; i < sizeof(kMagic); ++i) r.get<char>();
    const auto version = r.get<std::uint8_t>();
    if (version != kModelVersion) throw std::runtime_error("unsupported model version " + std::to_string(version));
    EncoderState s;
    const auto act = r.get<std::uint8_t>();
    if (act > 1) throw std::runtime_error("unknown activation code " + std::to_string(act));
    s.activation = static_cast<Activation>(act);
    s.normalize = r.get<std::uint8_t>() != 0;
    const auto layers = r.get<std::uint32_t>();
    for (std::uint32_t i = 0; i < layers; ++i) {
        const auto rows = r.get<std::uint32_t>();
        const auto cols = r.get<std::uint32_t>();
        Layer l{Matrix(rows, cols), Vector(rows)};
        for (double& w : l.weight.data) w = r.get<double>();
        for (double& b : l.bias) b = r.get<double>();
        s.layers.push_back(std::move(l));
    }
    if (!r.done()) throw std::runtime_error("trailing bytes after model");
    s.validate();
    return s;
}

void save_model(const std::filesystem::path& path, const EncoderState& state) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    const std::string bytes = serialize_model(state);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

EncoderState load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return deserialize_model(buf.str());
}

}  // namespace uda
