#include "ebprde/rng.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace ebprde {

namespace {

std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

std::uint64_t fnv1a(const std::string& s)
{
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

}  // namespace

std::uint64_t splitmix64(std::uint64_t& state)
{
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

RngStream::RngStream(std::uint64_t master_seed, std::vector<std::string> labels)
    : master_(master_seed), labels_(std::move(labels))
{
    // key = chained SplitMix64 over the master seed and the hashed labels,
    // each label prefixed by its position so that tuples do not collide
    std::uint64_t key = master_seed;
    std::uint64_t k = splitmix64(key);
    for (std::size_t i = 0; i < labels_.size(); ++i) {
        if (labels_[i].find('/') != std::string::npos)
            throw std::invalid_argument("RngStream: label may not contain '/'");
        std::uint64_t mix = k ^ fnv1a(std::to_string(i) + ":" + labels_[i]);
        k = splitmix64(mix);
    }
    std::uint64_t sm = k;
    for (auto& w : s_) w = splitmix64(sm);
}

std::uint64_t RngStream::next_u64()
{
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
}

double RngStream::uniform()
{
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double RngStream::normal()
{
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    // Marsaglia polar method
    double a, b, s;
    do {
        a = 2.0 * uniform() - 1.0;
        b = 2.0 * uniform() - 1.0;
        s = a * a + b * b;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = b * f;
    has_spare_ = true;
    return a * f;
}

double RngStream::exponential(double rate)
{
    return -std::log(uniform()) / rate;
}

std::size_t RngStream::below(std::size_t bound)
{
    if (bound == 0) throw std::invalid_argument("RngStream::below: empty range");
    // Lemire's multiply-shift with rejection
    const std::uint64_t b = bound;
    std::uint64_t x = next_u64();
    __uint128_t m = static_cast<__uint128_t>(x) * b;
    std::uint64_t low = static_cast<std::uint64_t>(m);
    if (low < b) {
        const std::uint64_t threshold = -b % b;
        while (low < threshold) {
            x = next_u64();
            m = static_cast<__uint128_t>(x) * b;
            low = static_cast<std::uint64_t>(m);
        }
    }
    return static_cast<std::size_t>(m >> 64);
}

RngStream RngStream::child(const std::string& label) const
{
    auto l = labels_;
    l.push_back(label);
    return RngStream(master_, std::move(l));
}

std::string RngStream::serialize() const
{
    std::ostringstream os;
    os << master_ << ':';
    for (std::size_t i = 0; i < labels_.size(); ++i) {
        if (i) os << '/';
        os << labels_[i];
    }
    return os.str();
}

RngStream RngStream::deserialize(const std::string& text)
{
    const auto colon = text.find(':');
    if (colon == std::string::npos) throw std::invalid_argument("RngStream: malformed stream tag");
    const std::uint64_t seed = std::stoull(text.substr(0, colon));
    std::vector<std::string> labels;
    std::string rest = text.substr(colon + 1);
    if (!rest.empty()) {
        std::size_t pos = 0;
        while (true) {
            const auto slash = rest.find('/', pos);
            labels.push_back(rest.substr(pos, slash == std::string::npos ? std::string::npos : slash - pos));
            if (slash == std::string::npos) break;
            pos = slash + 1;
        }
    }
    return RngStream(seed, std::move(labels));
}

}  // namespace ebprde
