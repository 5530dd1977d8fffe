#include "affaudit/url.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>

namespace affaudit {

namespace {

int default_port(std::string_view scheme) {
  if (scheme == "http") return 80;
  if (scheme == "https") return 443;
  return -1;
}

bool is_scheme_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '+' || c == '-' || c == '.';
}

bool is_host_char(char c) {
  const auto u = static_cast<unsigned char>(c);
  return std::isalnum(u) || c == '-' || c == '.' || c == '_' || u >= 0x80;
}

}  // namespace

std::string to_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::vector<QueryParam> parse_query(std::string_view query) {
  std::vector<QueryParam> params;
  while (!query.empty()) {
    const auto amp = query.find('&');
    const std::string_view item = query.substr(0, amp);
    if (!item.empty()) {
      const auto eq = item.find('=');
      if (eq == std::string_view::npos) {
        params.emplace_back(std::string(item), std::string());
      } else {
        params.emplace_back(std::string(item.substr(0, eq)), std::string(item.substr(eq + 1)));
      }
    }
    if (amp == std::string_view::npos) break;
    query.remove_prefix(amp + 1);
  }
  return params;
}

std::optional<Url> parse_url(std::string_view text) {
  const auto colon = text.find(':');
  if (colon == std::string_view::npos || colon == 0) return std::nullopt;
  if (!std::isalpha(static_cast<unsigned char>(text[0]))) return std::nullopt;
  const std::string_view scheme = text.substr(0, colon);
  if (!std::all_of(scheme.begin(), scheme.end(), is_scheme_char)) return std::nullopt;
  std::string_view rest = text.substr(colon + 1);
  if (rest.substr(0, 2) != "//") return std::nullopt;
  rest.remove_prefix(2);

  Url url;
  url.scheme = to_lower(scheme);

  const auto authority_end = rest.find_first_of("/?#");
  std::string_view authority = rest.substr(0, authority_end);
  rest = authority_end == std::string_view::npos ? std::string_view{} : rest.substr(authority_end);

  if (const auto at = authority.rfind('@'); at != std::string_view::npos) {
    authority.remove_prefix(at + 1);
  }
  std::string_view host = authority;
  if (const auto pc = authority.rfind(':'); pc != std::string_view::npos) {
    host = authority.substr(0, pc);
    const std::string_view port_text = authority.substr(pc + 1);
    if (!port_text.empty()) {
      int port = 0;
      const auto [ptr, ec] =
          std::from_chars(port_text.data(), port_text.data() + port_text.size(), port);
      if (ec != std::errc{} || ptr != port_text.data() + port_text.size() || port <= 0 ||
          port > 65535) {
        return std::nullopt;
      }
      url.port = port == default_port(url.scheme) ? -1 : port;
    }
  }
  if (host.empty() || !std::all_of(host.begin(), host.end(), is_host_char)) return std::nullopt;
  if (host.front() == '.') return std::nullopt;
  url.host = to_lower(host);

  const auto hash = rest.find('#');
  if (hash != std::string_view::npos) {
    url.fragment = std::string(rest.substr(hash + 1));
    rest = rest.substr(0, hash);
  }
  const auto q = rest.find('?');
  url.path = std::string(rest.substr(0, q));
  if (q != std::string_view::npos) url.query = parse_query(rest.substr(q + 1));
  return url;
}

std::string Url::origin() const {
  std::string out = scheme + "://" + host;
  if (port != -1) out += ":" + std::to_string(port);
  return out;
}

std::string Url::str() const {
  std::string out = origin();
  out += path.empty() ? "/" : path;
  if (!query.empty()) {
    out += '?';
    for (std::size_t i = 0; i < query.size(); ++i) {
      if (i) out += '&';
      out += query[i].first;
      if (!query[i].second.empty()) out += "=" + query[i].second;
    }
  }
  if (!fragment.empty()) out += "#" + fragment;
  return out;
}

std::optional<std::string> normalize_url(std::string_view text) {
  auto url = parse_url(text);
  if (!url) return std::nullopt;
  return url->str();
}

bool is_valid_origin(std::string_view text) {
  auto url = parse_url(text);
  if (!url) return false;
  return url->path.empty() && url->query.empty() && url->fragment.empty() &&
         text.find('?') == std::string_view::npos && text.find('#') == std::string_view::npos;
}

std::string registrable_host(const Url& url) {
  std::string_view host = url.host;
  if (host.substr(0, 4) == "www.") host.remove_prefix(4);
  return std::string(host);
}

}  // namespace affaudit
