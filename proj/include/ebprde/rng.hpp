#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <type_traits>
#include <vector>

namespace ebprde {

std::uint64_t splitmix64(std::uint64_t& state);

// xoshiro256** generator whose state is derived from (master seed, label tuple)
class RngStream {
public:
    RngStream(std::uint64_t master_seed, std::vector<std::string> labels);

    std::uint64_t next_u64();
    // uniform on the open interval (0, 1)
    double uniform();
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    double normal();
    double exponential(double rate);
    std::size_t below(std::size_t bound);

    RngStream child(const std::string& label) const;

    std::uint64_t master_seed() const { return master_; }
    const std::vector<std::string>& labels() const { return labels_; }

    // "seed:label/label/..."; labels may not contain '/'
    std::string serialize() const;
    static RngStream deserialize(const std::string& text);

private:
    std::uint64_t master_;
    std::vector<std::string> labels_;
    std::array<std::uint64_t, 4> s_{};
    bool has_spare_ = false;
    double spare_ = 0.0;
};

inline std::string to_label(const std::string& s) { return s; }
inline std::string to_label(const char* s) { return s; }
template <typename T>
    requires std::is_arithmetic_v<T>
std::string to_label(T x)
{
    return std::to_string(x);
}

template <typename... Labels>
RngStream seed_stream(std::uint64_t master_seed, const Labels&... labels)
{
    std::vector<std::string> v;
    (v.push_back(to_label(labels)), ...);
    return RngStream(master_seed, std::move(v));
}

}  // namespace ebprde
