#include "cantcn/nn/model_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include <fmt/format.h>

namespace cantcn::nn {

static_assert(std::endian::native == std::endian::little, "model files are written in host byte order");

namespace {

constexpr char kMagic[8] = {'C', 'A', 'N', 'T', 'C', 'N', 'M', '\0'};

template <typename T>
void put(std::string& out, T value)
{
    char buf[sizeof(T)];
    std::memcpy(buf, &value, sizeof(T));
    out.append(buf, sizeof(T));
}

class Reader
{
public:
    explicit Reader(std::string_view bytes) : bytes_(bytes) {}

    template <typename T>
    T get(const char* what)
    {
        if (bytes_.size() - pos_ < sizeof(T))
            throw ModelFormatError(fmt::format("model file truncated while reading {}", what));
        T value;
        std::memcpy(&value, bytes_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return value;
    }

    void read_doubles(std::span<double> out, const char* what)
    {
        if ((bytes_.size() - pos_) / sizeof(double) < out.size())
            throw ModelFormatError(fmt::format("model file truncated inside {}", what));
        std::memcpy(out.data(), bytes_.data() + pos_, out.size() * sizeof(double));
        pos_ += out.size() * sizeof(double);
    }

    bool at_end() const { return pos_ == bytes_.size(); }

private:
    std::string_view bytes_;
    std::size_t pos_ = 0;
};

} // namespace

std::string serialize_model(const TcnModel& model)
{
    std::string out(kMagic, sizeof(kMagic));
    const auto& c = model.config;
    put<std::uint32_t>(out, kModelFormatVersion);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(c.n_signals));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(c.filters));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(c.kernel_size));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(c.dilations.size()));
    for (std::size_t d : c.dilations)
        put<std::uint32_t>(out, static_cast<std::uint32_t>(d));
    put<std::uint8_t>(out, c.relu_after_add ? 1 : 0);

    for (auto p : model.parameters()) {
        put<std::uint64_t>(out, p.size());
        out.append(reinterpret_cast<const char*>(p.data()), p.size() * sizeof(double));
    }
    return out;
}

TcnModel deserialize_model(std::string_view bytes)
{
    if (bytes.size() < sizeof(kMagic) || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0)
        throw ModelFormatError("not a cantcn model file");
    Reader in(bytes.substr(sizeof(kMagic)));

    const auto version = in.get<std::uint32_t>("version");
    if (version != kModelFormatVersion)
        throw ModelFormatError(fmt::format("model format version {} is not supported (expected {})", version,
                                           kModelFormatVersion));

    ModelConfig config;
    config.n_signals = in.get<std::uint32_t>("n_signals");
    config.filters = in.get<std::uint32_t>("filters");
    config.kernel_size = in.get<std::uint32_t>("kernel_size");
    const auto n_blocks = in.get<std::uint32_t>("block count");
    if (n_blocks == 0 || n_blocks > 64)
        throw ModelFormatError(fmt::format("implausible block count {}", n_blocks));
    config.dilations.clear();
    for (std::uint32_t i = 0; i < n_blocks; ++i)
        config.dilations.push_back(in.get<std::uint32_t>("dilation"));
    config.relu_after_add = in.get<std::uint8_t>("activation flag") != 0;

    TcnModel model;
    try {
        model = make_model(config);
    } catch (const std::exception& e) {
        throw ModelFormatError(fmt::format("invalid architecture in header: {}", e.what()));
    }

    std::size_t index = 0;
    for (auto p : model.parameters()) {
        const auto n = in.get<std::uint64_t>("array length");
        if (n != p.size())
            throw ModelFormatError(fmt::format("parameter array {} has {} values, header implies {}", index, n,
                                               p.size()));
        in.read_doubles(p, "parameter array");
        ++index;
    }
    if (!in.at_end())
        throw ModelFormatError("trailing bytes after model parameters");
    return model;
}

void save_model(const TcnModel& model, const std::string& path)
{
    const std::string bytes = serialize_model(model);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw std::runtime_error("cannot write model file: " + path);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out)
        throw std::runtime_error("failed writing model file: " + path);
}

TcnModel load_model(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot open model file: " + path);
    const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return deserialize_model(bytes);
}

} // namespace cantcn::nn
