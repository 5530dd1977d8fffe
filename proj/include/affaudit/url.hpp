#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace affaudit {

using QueryParam = std::pair<std::string, std::string>;

/// A parsed absolute URL. Scheme and host are lowercased, default ports are
/// dropped, and query parameters keep their original order. Percent-escapes
/// are left untouched.
struct Url {
  std::string scheme;
  std::string host;
  int port = -1;  // -1 when absent or default for the scheme
  std::string path;
  std::vector<QueryParam> query;
  std::string fragment;

  std::string origin() const;
  std::string str() const;
};

/// Parses an absolute URL of the form scheme://host[:port][/path][?query][#frag].
/// Returns nullopt for relative references, empty hosts and bad ports.
std::optional<Url> parse_url(std::string_view text);

/// Normalized spelling of `text`, or nullopt when it does not parse.
std::optional<std::string> normalize_url(std::string_view text);

/// Whether `text` is a bare origin (scheme://host[:port], nothing else).
bool is_valid_origin(std::string_view text);

/// Host without a leading "www.".
std::string registrable_host(const Url& url);

std::vector<QueryParam> parse_query(std::string_view query);

std::string to_lower(std::string_view s);

}  // namespace affaudit
