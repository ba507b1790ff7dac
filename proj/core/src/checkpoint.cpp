#include "vlad/checkpoint.hpp"

#include "vlad/digest.hpp"
#include "vlad/error.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>

namespace vlad {

namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

constexpr std::array<char, 8> kMagic{'V', 'L', 'A', 'D', 'C', 'K', 'P', 'T'};

class Writer {
public:
    explicit Writer(std::ofstream& out) : out_(out) {}

    template <typename T>
    void pod(T value) { out_.write(reinterpret_cast<const char*>(&value), sizeof(T)); }

    void str(const std::string& s)
    {
        pod(static_cast<std::uint32_t>(s.size()));
        out_.write(s.data(), static_cast<std::streamsize>(s.size()));
    }

    void doubles(const std::vector<double>& v)
    {
        out_.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
    }

private:
    std::ofstream& out_;
};

class Reader {
public:
    Reader(std::ifstream& in, const std::filesystem::path& path) : in_(in), path_(path) {}

    template <typename T>
    T pod()
    {
        T value{};
        in_.read(reinterpret_cast<char*>(&value), sizeof(T));
        check();
        return value;
    }

    std::string str()
    {
        const auto n = pod<std::uint32_t>();
        std::string s(n, '\0');
        in_.read(s.data(), n);
        check();
        return s;
    }

    std::vector<double> doubles(std::size_t n)
    {
        std::vector<double> v(n);
        in_.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(double)));
        check();
        return v;
    }

private:
    void check()
    {
        if (!in_) throw io_error("checkpoint '" + path_.string() + "' is truncated or unreadable");
    }

    std::ifstream& in_;
    const std::filesystem::path& path_;
};

}  // namespace

const ParameterTensor& Checkpoint::array(const std::string& name) const
{
    for (const auto& a : arrays) {
        if (a.name == name) return a;
    }
    throw model_error("checkpoint has no parameter array '" + name + "'");
}

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw io_error("cannot open '" + path.string() + "' for writing");
    }
    Writer w(out);
    out.write(kMagic.data(), kMagic.size());
    w.pod(kCheckpointMajorVersion);
    w.pod(kCheckpointMinorVersion);
    w.str(ckpt.contract_type);
    w.str(ckpt.model_type);
    w.str(ckpt.vocabulary.id());
    w.pod(static_cast<std::uint32_t>(ckpt.vocabulary.size()));
    for (const auto& label : ckpt.vocabulary.labels()) w.str(label);
    w.pod(ckpt.seed);
    w.str(ckpt.config_digest);
    w.str(ckpt.config.dump());
    w.str(ckpt.state.dump());
    w.pod(static_cast<std::uint32_t>(ckpt.arrays.size()));
    for (const auto& a : ckpt.arrays) {
        if (element_count(a.dims) != a.values.size()) {
            throw model_error("parameter array '" + a.name + "' does not match its dims");
        }
        w.str(a.name);
        w.pod(static_cast<std::uint32_t>(a.dims.size()));
        for (auto d : a.dims) w.pod(d);
        w.doubles(a.values);
    }
    if (!out) {
        throw io_error("failed writing checkpoint '" + path.string() + "'");
    }
}

Checkpoint read_checkpoint(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw io_error("cannot open checkpoint '" + path.string() + "'");
    }
    std::array<char, 8> magic{};
    in.read(magic.data(), magic.size());
    if (!in || magic != kMagic) {
        throw io_error("'" + path.string() + "' is not a checkpoint (bad magic)");
    }
    Reader r(in, path);
    const auto major = r.pod<std::uint32_t>();
    r.pod<std::uint32_t>();  // minor: additive changes only
    if (major != kCheckpointMajorVersion) {
        throw io_error("checkpoint '" + path.string() + "' has major version " + std::to_string(major) +
                       ", this build reads " + std::to_string(kCheckpointMajorVersion));
    }
    Checkpoint ckpt;
    ckpt.contract_type = r.str();
    ckpt.model_type = r.str();
    std::string vocab_id = r.str();
    const auto label_count = r.pod<std::uint32_t>();
    std::vector<std::string> labels;
    labels.reserve(label_count);
    for (std::uint32_t i = 0; i < label_count; ++i) labels.push_back(r.str());
    ckpt.vocabulary = LabelVocabulary(std::move(labels), std::move(vocab_id));
    ckpt.seed = r.pod<std::uint64_t>();
    ckpt.config_digest = r.str();
    try {
        ckpt.config = nlohmann::json::parse(r.str());
        ckpt.state = nlohmann::json::parse(r.str());
    } catch (const nlohmann::json::parse_error& e) {
        throw io_error("checkpoint '" + path.string() + "' has a corrupt header: " + e.what());
    }
    const auto count = r.pod<std::uint32_t>();
    for (std::uint32_t i = 0; i < count; ++i) {
        ParameterTensor a;
        a.name = r.str();
        const auto ndims = r.pod<std::uint32_t>();
        for (std::uint32_t d = 0; d < ndims; ++d) a.dims.push_back(r.pod<std::uint64_t>());
        a.values = r.doubles(element_count(a.dims));
        ckpt.arrays.push_back(std::move(a));
    }
    return ckpt;
}

std::string config_digest(const nlohmann::json& config)
{
    // nlohmann::json objects keep keys sorted, so dump() is canonical.
    return sha256_hex(config.dump());
}

}  // namespace vlad
