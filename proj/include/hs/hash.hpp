#pragma once
#include <cstddef>
#include <memory>
#include <string>

namespace hs {

/// Incremental SHA-256, hex digest.
class Sha256 {
public:
    Sha256();
    ~Sha256();
    Sha256(const Sha256&) = delete;
    Sha256& operator=(const Sha256&) = delete;
    void update(const void* data, std::size_t n);
    void update(const std::string& s) { update(s.data(), s.size()); }
    template <class T>
    void update_pod(const T& v) { update(&v, sizeof(T)); }
    std::string hex();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::string& path);

} // namespace hs
