#pragma once

#include <cstdint>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

namespace aoimec::binio {

template <class T>
void put(std::ostream& out, const T& v) {
  static_assert(std::is_trivially_copyable_v<T>);
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& in) {
  static_assert(std::is_trivially_copyable_v<T>);
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw std::runtime_error("checkpoint truncated");
  return v;
}

template <class T>
void put_vec(std::ostream& out, const std::vector<T>& v) {
  put<std::uint64_t>(out, v.size());
  if (!v.empty()) out.write(reinterpret_cast<const char*>(v.data()), sizeof(T) * v.size());
}

template <class T>
std::vector<T> get_vec(std::istream& in, std::uint64_t limit = (1ULL << 32)) {
  const auto n = get<std::uint64_t>(in);
  if (n > limit) throw std::runtime_error("checkpoint length field out of range");
  std::vector<T> v(n);
  if (n) in.read(reinterpret_cast<char*>(v.data()), sizeof(T) * n);
  if (!in) throw std::runtime_error("checkpoint truncated");
  return v;
}

inline void put_str(std::ostream& out, const std::string& s) {
  put<std::uint64_t>(out, s.size());
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string get_str(std::istream& in) {
  const auto n = get<std::uint64_t>(in);
  if (n > (1ULL << 24)) throw std::runtime_error("checkpoint string too long");
  std::string s(n, '\0');
  in.read(s.data(), static_cast<std::streamsize>(n));
  if (!in) throw std::runtime_error("checkpoint truncated");
  return s;
}

}  // namespace aoimec::binio
