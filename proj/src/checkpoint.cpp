#include "steinprune/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include <zlib.h>

namespace steinprune {

namespace {

constexpr char kMagic[8] = {'D', 'L', 'L', 'P', 'C', 'K', 'P', 'T'};
constexpr char kMaskMagic[8] = {'D', 'L', 'L', 'P', 'M', 'A', 'S', 'K'};

enum SectionId : std::uint32_t {
    kSectionTopology = 1,
    kSectionParticles = 2,
    kSectionTrainState = 3,
    kSectionNormalization = 4,
    kSectionMeta = 5,
};

class Writer {
  public:
    void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
    }
    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
    }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
    void rng(const RngState& r) {
        u64(r.seed);
        u64(r.stream);
        u64(r.counter);
    }
    const std::string& bytes() const { return buf_; }

  private:
    std::string buf_;
};

class Reader {
  public:
    Reader(const std::string& bytes, std::string what) : bytes_(bytes), what_(std::move(what)) {}

    std::uint8_t u8() { return static_cast<std::uint8_t>(take(1)[0]); }
    std::uint32_t u32() {
        const char* p = take(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(p[i])) << (8 * i);
        return v;
    }
    std::uint64_t u64() {
        const char* p = take(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(p[i])) << (8 * i);
        return v;
    }
    double f64() { return std::bit_cast<double>(u64()); }
    RngState rng() {
        RngState r;
        r.seed = u64();
        r.stream = u64();
        r.counter = u64();
        return r;
    }
    const char* take(std::size_t n) {
        if (pos_ + n > bytes_.size())
            throw FormatError(what_ + ": truncated at byte offset " + std::to_string(pos_));
        const char* p = bytes_.data() + pos_;
        pos_ += n;
        return p;
    }
    std::size_t pos() const { return pos_; }
    bool done() const { return pos_ == bytes_.size(); }

  private:
    const std::string& bytes_;
    std::string what_;
    std::size_t pos_ = 0;
};

std::uint32_t crc_of(const std::string& payload) {
    uLong crc = ::crc32(0L, Z_NULL, 0);
    crc = ::crc32(crc, reinterpret_cast<const Bytef*>(payload.data()),
                  static_cast<uInt>(payload.size()));
    return static_cast<std::uint32_t>(crc);
}

std::string read_whole_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

}  // namespace

void save_checkpoint(const Checkpoint& checkpoint, const std::string& path) {
    if (checkpoint.ensemble.size() < 2)
        throw DomainError("refusing to save an ensemble with n < 2 particles");
    checkpoint.ensemble.validate();

    auto section = [](std::uint32_t id, const Writer& payload) {
        Writer head;
        head.u32(id);
        head.u64(payload.bytes().size());
        std::string out = head.bytes() + payload.bytes();
        Writer crc;
        crc.u32(crc_of(payload.bytes()));
        return out + crc.bytes();
    };

    Writer file;
    for (char c : kMagic) file.u8(static_cast<std::uint8_t>(c));
    file.u32(checkpoint.format_version);

    std::string body;
    {
        Writer w;
        const auto& topo = checkpoint.ensemble.topology;
        w.u32(static_cast<std::uint32_t>(topo.size()));
        for (const auto& s : topo) {
            w.u64(s.fan_in);
            w.u64(s.fan_out);
            w.u8(static_cast<std::uint8_t>(s.activation));
        }
        body += section(kSectionTopology, w);
    }
    {
        Writer w;
        w.u32(static_cast<std::uint32_t>(checkpoint.ensemble.size()));
        for (const auto& p : checkpoint.ensemble.particles) {
            const auto flat = p.params.flatten();
            w.u64(flat.size());
            for (double v : flat) w.f64(v);
            for (double v : p.gates.logits()) w.f64(v);
            w.f64(p.noise.d);
            w.f64(p.noise.lambda);
            w.f64(p.noise.epsilon_ratio);
            w.f64(p.noise.epsilon_spike);
        }
        body += section(kSectionParticles, w);
    }
    {
        Writer w;
        const auto& st = checkpoint.train_state;
        w.u64(st.global_step);
        w.u64(st.epoch);
        w.rng(st.shuffle_rng);
        w.u32(static_cast<std::uint32_t>(st.gate_rngs.size()));
        for (const auto& r : st.gate_rngs) w.rng(r);
        w.f64(st.plateau_best);
        w.u32(st.plateau_count);
        body += section(kSectionTrainState, w);
    }
    {
        Writer w;
        w.u64(checkpoint.normalization.shift.size());
        for (double v : checkpoint.normalization.shift) w.f64(v);
        for (double v : checkpoint.normalization.scale) w.f64(v);
        body += section(kSectionNormalization, w);
    }
    {
        Writer w;
        w.u64(checkpoint.config_hash);
        body += section(kSectionMeta, w);
    }

    atomic_write_file(path, file.bytes() + body);
}

Checkpoint load_checkpoint(const std::string& path) {
    const std::string bytes = read_whole_file(path);
    Reader file(bytes, path);
    const char* magic = file.take(8);
    if (std::memcmp(magic, kMagic, 8) != 0)
        throw FormatError(path + ": bad magic at byte offset 0 (not a DLLPCKPT file)");
    const std::uint32_t version = file.u32();
    if (version != kCheckpointVersion)
        throw FormatError(path + ": unknown checkpoint version " + std::to_string(version) +
                          " (expected " + std::to_string(kCheckpointVersion) + ")");

    Checkpoint ck;
    ck.format_version = version;
    bool have_topology = false, have_particles = false;
    std::vector<LayerSpec> topo;

    while (!file.done()) {
        const std::uint32_t id = file.u32();
        const std::uint64_t len = file.u64();
        const std::size_t payload_at = file.pos();
        const char* payload = file.take(len);
        const std::string payload_str(payload, len);
        const std::uint32_t crc = file.u32();
        if (crc != crc_of(payload_str))
            throw FormatError(path + ": checksum failure in section " + std::to_string(id) +
                              " at byte offset " + std::to_string(payload_at));
        Reader r(payload_str, path + " section " + std::to_string(id));
        switch (id) {
            case kSectionTopology: {
                const std::uint32_t layers = r.u32();
                for (std::uint32_t l = 0; l < layers; ++l) {
                    LayerSpec s;
                    s.fan_in = r.u64();
                    s.fan_out = r.u64();
                    s.activation = static_cast<Activation>(r.u8());
                    topo.push_back(s);
                }
                have_topology = true;
                break;
            }
            case kSectionParticles: {
                if (!have_topology) throw FormatError(path + ": particles before topology");
                const std::uint32_t n = r.u32();
                for (std::uint32_t p = 0; p < n; ++p) {
                    Particle particle;
                    RngState dummy(0, 0);
                    particle.params = init_network(topo, dummy);
                    const std::uint64_t m = r.u64();
                    if (m != particle.params.scalar_count())
                        throw FormatError(path + ": particle size does not match topology");
                    std::vector<double> flat(m);
                    for (auto& v : flat) v = r.f64();
                    particle.params.unflatten(flat);
                    particle.gates = GateSet::init(m, 0.5);
                    for (auto& l : particle.gates.logits()) l = r.f64();
                    particle.noise.d = r.f64();
                    particle.noise.lambda = r.f64();
                    particle.noise.epsilon_ratio = r.f64();
                    particle.noise.epsilon_spike = r.f64();
                    ck.ensemble.particles.push_back(std::move(particle));
                }
                ck.ensemble.topology = topo;
                have_particles = true;
                break;
            }
            case kSectionTrainState: {
                ck.train_state.global_step = r.u64();
                ck.train_state.epoch = r.u64();
                ck.train_state.shuffle_rng = r.rng();
                const std::uint32_t n = r.u32();
                ck.train_state.gate_rngs.clear();
                for (std::uint32_t p = 0; p < n; ++p) ck.train_state.gate_rngs.push_back(r.rng());
                ck.train_state.plateau_best = r.f64();
                ck.train_state.plateau_count = r.u32();
                break;
            }
            case kSectionNormalization: {
                const std::uint64_t d = r.u64();
                ck.normalization.shift.resize(d);
                ck.normalization.scale.resize(d);
                for (auto& v : ck.normalization.shift) v = r.f64();
                for (auto& v : ck.normalization.scale) v = r.f64();
                break;
            }
            case kSectionMeta: {
                ck.config_hash = r.u64();
                break;
            }
            default:
                throw FormatError(path + ": unknown section id " + std::to_string(id));
        }
    }
    if (!have_topology || !have_particles)
        throw FormatError(path + ": missing topology or particle sections");
    ck.ensemble.validate();
    return ck;
}

void save_mask(const PruneMask& mask, const std::string& path) {
    Writer w;
    for (char c : kMaskMagic) w.u8(static_cast<std::uint8_t>(c));
    w.u32(1);
    w.u64(mask.keep.size());
    std::string packed((mask.keep.size() + 7) / 8, '\0');
    for (std::size_t i = 0; i < mask.keep.size(); ++i)
        if (mask.keep[i]) packed[i / 8] |= static_cast<char>(1u << (i % 8));
    std::string out = w.bytes() + packed;
    Writer crc;
    crc.u32(crc_of(packed));
    atomic_write_file(path, out + crc.bytes());
}

PruneMask load_mask(const std::string& path) {
    const std::string bytes = read_whole_file(path);
    Reader r(bytes, path);
    const char* magic = r.take(8);
    if (std::memcmp(magic, kMaskMagic, 8) != 0)
        throw FormatError(path + ": bad magic at byte offset 0 (not a DLLPMASK file)");
    const std::uint32_t version = r.u32();
    if (version != 1)
        throw FormatError(path + ": unknown mask version " + std::to_string(version) +
                          " (expected 1)");
    const std::uint64_t m = r.u64();
    const std::size_t packed_len = (m + 7) / 8;
    const char* packed = r.take(packed_len);
    const std::uint32_t crc = r.u32();
    if (crc != crc_of(std::string(packed, packed_len)))
        throw FormatError(path + ": checksum failure in keep bitmap");
    PruneMask mask;
    mask.keep.resize(m);
    for (std::size_t i = 0; i < m; ++i)
        mask.keep[i] = (packed[i / 8] >> (i % 8)) & 1 ? 1 : 0;
    mask.recompute_sparsity();
    return mask;
}

}  // namespace steinprune
