#include "bbrel/net_address.hpp"

#include <arpa/inet.h>

#include <charconv>

namespace bbrel {

std::optional<IpAddress> IpAddress::parse(std::string_view text) {
  std::string s(text);
  IpAddress out;
  if (s.find(':') != std::string::npos) {
    out.v6 = true;
    if (inet_pton(AF_INET6, s.c_str(), out.bytes.data()) != 1) return std::nullopt;
  } else {
    if (inet_pton(AF_INET, s.c_str(), out.bytes.data()) != 1) return std::nullopt;
  }
  return out;
}

std::string IpAddress::to_string() const {
  char buf[INET6_ADDRSTRLEN];
  inet_ntop(v6 ? AF_INET6 : AF_INET, bytes.data(), buf, sizeof buf);
  return buf;
}

std::optional<IpPrefix> IpPrefix::parse(std::string_view text) {
  auto slash = text.find('/');
  auto addr = IpAddress::parse(text.substr(0, slash));
  if (!addr) return std::nullopt;
  int max_len = addr->v6 ? 128 : 32;
  int len = max_len;
  if (slash != std::string_view::npos) {
    auto digits = text.substr(slash + 1);
    auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), len);
    if (ec != std::errc() || ptr != digits.data() + digits.size() || len < 0 || len > max_len) {
      return std::nullopt;
    }
  }
  return IpPrefix{*addr, len};
}

bool IpPrefix::contains(const IpAddress& addr) const {
  if (addr.v6 != network.v6) return false;
  int full = length / 8;
  for (int i = 0; i < full; ++i) {
    if (addr.bytes[i] != network.bytes[i]) return false;
  }
  int rem = length % 8;
  if (rem == 0) return true;
  std::uint8_t mask = static_cast<std::uint8_t>(0xFF << (8 - rem));
  return (addr.bytes[full] & mask) == (network.bytes[full] & mask);
}

}  // namespace bbrel
