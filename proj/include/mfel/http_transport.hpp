#pragma once

// Network transport for fetch_title(). Kept apart from webcontext.hpp so that
// only binaries that really go online depend on cpp-httplib and TLS.

#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
#define CPPHTTPLIB_OPENSSL_SUPPORT
#endif
#include <httplib.h>
// <resolv.h> defines _res as a macro, which breaks Eigen headers included later.
#ifdef _res
#undef _res
#endif

#include <string>

#include "mfel/webcontext.hpp"

namespace mfel {

// One GET without following redirects. The body is cut off at
// policy.max_body_bytes.
inline HttpResponse httplib_get(const std::string& url, const FetchPolicy& policy) {
  HttpResponse out;
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    out.error = "not an absolute URL";
    return out;
  }
  const auto path_start = url.find_first_of("/?#", scheme_end + 3);
  const std::string origin = url.substr(0, path_start);
  std::string path = path_start == std::string::npos ? "/" : url.substr(path_start);
  if (path.front() != '/') path.insert(path.begin(), '/');
  if (auto hash = path.find('#'); hash != std::string::npos) path.resize(hash);

  try {
    httplib::Client client(origin);
    client.set_follow_location(false);
    client.set_connection_timeout(policy.timeout);
    client.set_read_timeout(policy.timeout);
    client.set_write_timeout(policy.timeout);
    bool truncated = false;
    auto res = client.Get(
        path, httplib::Headers{{"Accept", "text/html"}},
        [&](const httplib::Response& r) {
          out.status = r.status;
          if (r.has_header("Location")) out.location = r.get_header_value("Location");
          return true;
        },
        [&](const char* data, std::size_t len) {
          const std::size_t room = policy.max_body_bytes - out.body.size();
          if (len >= room) {
            out.body.append(data, room);
            truncated = true;
            return false;
          }
          out.body.append(data, len);
          return true;
        });
    if (!res && !truncated) {
      out.status = 0;
      out.error = httplib::to_string(res.error());
    }
  } catch (const std::exception& e) {
    out.status = 0;
    out.error = e.what();
  }
  return out;
}

}  // namespace mfel
