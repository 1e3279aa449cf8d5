#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace pwf {

// SplitMix64 finalizer, used to turn (root, label, index) into stream seeds.
std::uint64_t splitmix64(std::uint64_t x);

// Splittable seed source: every random stream in an experiment is derived
// from one root seed plus a label, so streams never overlap by accident.
class SeedTree {
public:
    explicit SeedTree(std::uint64_t root) : root_(root) {}

    std::uint64_t root() const { return root_; }
    std::uint64_t derive(std::string_view label, std::uint64_t index = 0) const;
    SeedTree child(std::string_view label, std::uint64_t index = 0) const { return SeedTree(derive(label, index)); }
    std::mt19937_64 engine(std::string_view label, std::uint64_t index = 0) const
    {
        return std::mt19937_64(derive(label, index));
    }

private:
    std::uint64_t root_;
};

} // namespace pwf
