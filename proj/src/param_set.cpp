#include "afgm/param_set.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>

#include "afgm/errors.hpp"

namespace afgm {

const char* role_name(Role r) {
    switch (r) {
        case Role::parameter: return "parameter";
        case Role::normalization: return "normalization";
        case Role::adam_m: return "adam_m";
        case Role::adam_v: return "adam_v";
        case Role::step: return "step";
    }
    return "unknown";
}

void ParamSet::add(std::string name, Tensor value, Role role) {
    if (contains(name)) {
        throw ConfigError("duplicate tensor name '" + name + "'");
    }
    entries_.push_back(NamedTensor{std::move(name), std::move(value), role});
}

bool ParamSet::contains(const std::string& name) const {
    return std::any_of(entries_.begin(), entries_.end(), [&](const NamedTensor& e) { return e.name == name; });
}

const NamedTensor& ParamSet::entry(const std::string& name) const {
    for (const auto& e : entries_) {
        if (e.name == name) {
            return e;
        }
    }
    throw ConfigError("no tensor named '" + name + "'");
}

const Tensor& ParamSet::at(const std::string& name) const { return entry(name).value; }

Tensor& ParamSet::at(const std::string& name) { return const_cast<NamedTensor&>(entry(name)).value; }

std::vector<std::size_t> ParamSet::indices(Role role) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        if (entries_[i].role == role) {
            out.push_back(i);
        }
    }
    return out;
}

std::size_t ParamSet::scalar_count(Role role) const {
    std::size_t n = 0;
    for (const auto& e : entries_) {
        if (e.role == role) {
            n += e.value.size();
        }
    }
    return n;
}

bool operator==(const ParamSet& a, const ParamSet& b) {
    if (a.size() != b.size()) {
        return false;
    }
    for (std::size_t i = 0; i < a.size(); ++i) {
        const auto& x = a.entries()[i];
        const auto& y = b.entries()[i];
        if (x.name != y.name || x.role != y.role || x.value.shape() != y.value.shape()) {
            return false;
        }
        // bitwise, so -0.0 and 0.0 differ and a round trip is checked exactly
        if (std::memcmp(x.value.data().data(), y.value.data().data(), x.value.size() * sizeof(double)) != 0) {
            return false;
        }
    }
    return true;
}

namespace {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <class U>
U to_little(U v) {
    if constexpr (std::endian::native == std::endian::big) {
        U out = 0;
        for (std::size_t i = 0; i < sizeof(U); ++i) {
            out = static_cast<U>((out << 8) | ((v >> (8 * i)) & 0xFF));
        }
        return out;
    }
    return v;
}

class Writer {
public:
    explicit Writer(std::ofstream& os) : os_(os) {}

    template <class U>
    void put(U v) {
        v = to_little(v);
        os_.write(reinterpret_cast<const char*>(&v), sizeof(U));
    }
    void put_f64(double d) { put(std::bit_cast<std::uint64_t>(d)); }
    void bytes(const std::string& s) { os_.write(s.data(), static_cast<std::streamsize>(s.size())); }

private:
    std::ofstream& os_;
};

class Reader {
public:
    Reader(std::ifstream& is, std::string path) : is_(is), path_(std::move(path)) {}

    template <class U>
    U get(const char* what) {
        U v = 0;
        if (!is_.read(reinterpret_cast<char*>(&v), sizeof(U))) {
            truncated(what);
        }
        return to_little(v);
    }
    double get_f64(const char* what) { return std::bit_cast<double>(get<std::uint64_t>(what)); }
    std::string bytes(std::size_t n, const char* what) {
        std::string s(n, '\0');
        if (n > 0 && !is_.read(s.data(), static_cast<std::streamsize>(n))) {
            truncated(what);
        }
        return s;
    }

private:
    [[noreturn]] void truncated(const char* what) {
        throw IngestionError("checkpoint " + path_ + ": truncated while reading " + what);
    }

    std::ifstream& is_;
    std::string path_;
};

constexpr std::array<char, 4> kMagic{'A', 'F', 'G', 'M'};
constexpr std::uint32_t kMaxRank = 8;
constexpr std::uint32_t kMaxNameLength = 4096;
constexpr std::uint64_t kMaxElements = std::uint64_t{1} << 32;

}  // namespace

void save_checkpoint(const ParamSet& params, const std::filesystem::path& path) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) {
        throw IoError("cannot open checkpoint for writing: " + path.string());
    }
    Writer w(os);
    os.write(kMagic.data(), kMagic.size());
    w.put<std::uint32_t>(kCheckpointVersion);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(params.size()));
    for (const auto& e : params.entries()) {
        w.put<std::uint32_t>(static_cast<std::uint32_t>(e.name.size()));
        w.bytes(e.name);
        w.put<std::uint32_t>(static_cast<std::uint32_t>(e.value.rank()));
        for (std::size_t ext : e.value.shape()) {
            w.put<std::uint64_t>(ext);
        }
        w.put<std::uint8_t>(static_cast<std::uint8_t>(e.role));
    }
    for (const auto& e : params.entries()) {
        for (double d : e.value.data()) {
            w.put_f64(d);
        }
    }
    os.flush();
    if (!os) {
        throw IoError("failed writing checkpoint " + path.string());
    }
}

ParamSet load_checkpoint(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) {
        throw IoError("cannot open checkpoint: " + path.string());
    }
    Reader r(is, path.string());
    const std::string magic = r.bytes(4, "magic");
    if (magic != std::string(kMagic.data(), kMagic.size())) {
        throw IngestionError("checkpoint " + path.string() + ": bad magic bytes");
    }
    const auto version = r.get<std::uint32_t>("version");
    if (version != kCheckpointVersion) {
        throw IngestionError("checkpoint " + path.string() + ": unsupported format version " +
                             std::to_string(version));
    }
    const auto count = r.get<std::uint32_t>("tensor count");
    struct Header {
        std::string name;
        Shape shape;
        Role role;
    };
    std::vector<Header> manifest;
    for (std::uint32_t i = 0; i < count; ++i) {
        Header h;
        const auto len = r.get<std::uint32_t>("name length");
        if (len > kMaxNameLength) {
            throw IngestionError("checkpoint " + path.string() + ": implausible name length " + std::to_string(len));
        }
        h.name = r.bytes(len, "name");
        const auto rank = r.get<std::uint32_t>("rank");
        if (rank > kMaxRank) {
            throw IngestionError("checkpoint " + path.string() + ": tensor '" + h.name + "' has rank " +
                                 std::to_string(rank));
        }
        std::uint64_t elements = 1;
        for (std::uint32_t k = 0; k < rank; ++k) {
            const auto ext = r.get<std::uint64_t>("extent");
            if (ext == 0 || ext > kMaxElements || elements * ext > kMaxElements) {
                throw IngestionError("checkpoint " + path.string() + ": tensor '" + h.name + "' has invalid extent " +
                                     std::to_string(ext));
            }
            elements *= ext;
            h.shape.push_back(static_cast<std::size_t>(ext));
        }
        const auto role = r.get<std::uint8_t>("role");
        if (role > static_cast<std::uint8_t>(Role::step)) {
            throw IngestionError("checkpoint " + path.string() + ": tensor '" + h.name + "' has unknown role " +
                                 std::to_string(role));
        }
        h.role = static_cast<Role>(role);
        manifest.push_back(std::move(h));
    }
    ParamSet out;
    for (auto& h : manifest) {
        Tensor t(h.shape);
        for (auto& d : t.data()) {
            d = r.get_f64("payload");
        }
        out.add(std::move(h.name), std::move(t), h.role);
    }
    if (is.peek() != std::char_traits<char>::eof()) {
        throw IngestionError("checkpoint " + path.string() + ": trailing bytes after payload");
    }
    return out;
}

void require_same_inventory(const ParamSet& expected, const ParamSet& actual, const std::vector<Role>& roles) {
    auto wanted = [&](Role r) { return std::find(roles.begin(), roles.end(), r) != roles.end(); };
    for (const auto& e : expected.entries()) {
        if (!wanted(e.role)) {
            continue;
        }
        if (!actual.contains(e.name)) {
            throw ConfigError("checkpoint is missing tensor '" + e.name + "'");
        }
        const auto& a = actual.entry(e.name);
        if (a.role != e.role) {
            throw ConfigError("checkpoint tensor '" + e.name + "' has role " + role_name(a.role) + ", expected " +
                              role_name(e.role));
        }
        if (a.value.shape() != e.value.shape()) {
            throw ConfigError("checkpoint tensor '" + e.name + "' has shape " + to_string(a.value.shape()) +
                              ", expected " + to_string(e.value.shape()));
        }
    }
    for (const auto& a : actual.entries()) {
        if (wanted(a.role) && !expected.contains(a.name)) {
            throw ConfigError("checkpoint has unexpected tensor '" + a.name + "'");
        }
    }
}

}  // namespace afgm
