// SPDX-License-Identifier: Apache-2.0
#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <chrono>
#include <fstream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "fixv2w/digest.hpp"
#include "fixv2w/error.hpp"
#include "fixv2w/ingest.hpp"

namespace fixv2w::ingest {
namespace {

constexpr const char* kHost = "https://services.nvd.nist.gov";
// The API rejects date ranges longer than 120 days.
constexpr int kMaxWindowDays = 120;

std::string iso_start(Date d) { return format_date(d) + "T00:00:00.000"; }
std::string iso_end(Date d) { return format_date(d) + "T23:59:59.999"; }

NvdClient::Transport https_transport(std::optional<std::string> api_key) {
  return [api_key = std::move(api_key)](const std::string& url) {
    const auto path_at = url.find('/', std::string_view("https://").size());
    httplib::Client cli(url.substr(0, path_at));
    cli.set_connection_timeout(30);
    cli.set_read_timeout(120);
    httplib::Headers headers;
    if (api_key) headers.emplace("apiKey", *api_key);
    // Public rate limits: 5 requests / 30 s without a key, 50 with one.
    std::this_thread::sleep_for(api_key ? std::chrono::milliseconds(700) : std::chrono::seconds(6));
    auto res = cli.Get(url.substr(path_at), headers);
    if (!res) throw NetworkError("GET " + url + " failed: " + httplib::to_string(res.error()));
    if (res->status != 200) throw NetworkError("GET " + url + " returned HTTP " + std::to_string(res->status));
    return res->body;
  };
}

}  // namespace

NvdClient::NvdClient(std::filesystem::path cache_dir, std::optional<std::string> api_key,
                     Transport transport)
    : cache_dir_(std::move(cache_dir)), api_key_(std::move(api_key)), transport_(std::move(transport)) {
  if (!transport_) transport_ = https_transport(api_key_);
}

std::string NvdClient::cache_key(const std::string& url) { return sha256_hex(url) + ".json"; }

std::string NvdClient::get(const std::string& url) {
  const auto path = cache_dir_ / cache_key(url);
  if (std::filesystem::exists(path)) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }
  auto body = transport_(url);
  std::filesystem::create_directories(cache_dir_);
  const auto tmp = path.string() + ".part";
  {
    std::ofstream out(tmp, std::ios::binary);
    out << body;
  }
  std::filesystem::rename(tmp, path);
  return body;
}

std::vector<std::string> NvdClient::fetch_paged(const std::string& path, const std::string& start_param,
                                                const std::string& end_param, std::string_view list_key,
                                                int page_size, FetchWindow window) {
  if (window.to < window.from) throw DateRangeError("fetch window ends before it starts");
  std::vector<std::string> pages;
  std::chrono::sys_days lo{window.from};
  const std::chrono::sys_days last{window.to};
  while (lo <= last) {
    const auto hi = std::min(last, lo + std::chrono::days{kMaxWindowDays - 1});
    long start = 0;
    for (;;) {
      const std::string url = std::string(kHost) + path + "?" + start_param + "=" + iso_start(Date{lo}) +
                              "&" + end_param + "=" + iso_end(Date{hi}) +
                              "&resultsPerPage=" + std::to_string(page_size) +
                              "&startIndex=" + std::to_string(start);
      auto body = get(url);
      long total = 0;
      long got = 0;
      try {
        const auto doc = nlohmann::json::parse(body);
        total = doc.value("totalResults", 0L);
        if (doc.contains(list_key)) got = static_cast<long>(doc[std::string(list_key)].size());
      } catch (const nlohmann::json::parse_error& e) {
        throw ParseError("NVD response for " + url + " is not JSON", e.byte);
      }
      pages.push_back(std::move(body));
      start += got;
      if (got == 0 || start >= total) break;
    }
    lo = hi + std::chrono::days{1};
  }
  return pages;
}

std::vector<std::string> NvdClient::fetch_cves(FetchWindow window) {
  return fetch_paged("/rest/json/cves/2.0", "pubStartDate", "pubEndDate", "vulnerabilities", 2000, window);
}

std::vector<std::string> NvdClient::fetch_history(FetchWindow window) {
  return fetch_paged("/rest/json/cvehistory/2.0", "changeStartDate", "changeEndDate", "cveChanges", 5000,
                     window);
}

}  // namespace fixv2w::ingest
