#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "afgm/tensor.hpp"

namespace afgm {

/// What a stored tensor is for. The numeric values are part of the checkpoint format.
enum class Role : std::uint8_t {
    parameter = 0,
    normalization = 1,
    adam_m = 2,
    adam_v = 3,
    step = 4,
};

const char* role_name(Role r);

struct NamedTensor {
    std::string name;
    Tensor value;
    Role role = Role::parameter;
};

/// Ordered, name-addressed collection of tensors. Order is insertion order
/// and is the order used for serialization and gradient vectors.
class ParamSet {
public:
    /// Throws ConfigError on a duplicate name.
    void add(std::string name, Tensor value, Role role = Role::parameter);

    [[nodiscard]] bool contains(const std::string& name) const;
    /// Throws ConfigError naming `name` if absent.
    [[nodiscard]] const Tensor& at(const std::string& name) const;
    Tensor& at(const std::string& name);
    [[nodiscard]] const NamedTensor& entry(const std::string& name) const;

    [[nodiscard]] const std::vector<NamedTensor>& entries() const noexcept { return entries_; }
    std::vector<NamedTensor>& entries() noexcept { return entries_; }
    [[nodiscard]] std::size_t size() const noexcept { return entries_.size(); }

    /// Indices of entries with the given role, in order.
    [[nodiscard]] std::vector<std::size_t> indices(Role role) const;
    /// Scalar count over entries with the given role.
    [[nodiscard]] std::size_t scalar_count(Role role) const;

    friend bool operator==(const ParamSet&, const ParamSet&);

private:
    std::vector<NamedTensor> entries_;
};

bool operator==(const ParamSet& a, const ParamSet& b);

/// Checkpoint layout: "AFGM", u32 version, u32 tensor count, then per tensor
/// {u32 name length, name bytes, u32 rank, u64 extents..., u8 role}, then every
/// payload as little-endian f64 in manifest order.
inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const ParamSet& params, const std::filesystem::path& path);
/// Throws IoError if the file cannot be read, IngestionError if it is malformed.
ParamSet load_checkpoint(const std::filesystem::path& path);

/// Throws ConfigError listing the first difference if `actual` does not carry
/// exactly the names, shapes and roles of `expected` for the given roles.
void require_same_inventory(const ParamSet& expected, const ParamSet& actual, const std::vector<Role>& roles);

}  // namespace afgm
