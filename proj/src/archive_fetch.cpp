#include "oss_mentor/archive_fetch.hpp"

#include <curl/curl.h>

#include <cstdio>
#include <stdexcept>
#include <system_error>

#include "oss_mentor/data_ingest.hpp"

namespace oss_mentor {

std::optional<ArchiveHour> parse_archive_hour(const std::string& text, bool end_of_day) {
    using namespace std::chrono;
    int y = 0;
    unsigned mo = 0, d = 0;
    int h = end_of_day ? 23 : 0;
    char tail = 0;
    int consumed = 0;
    if (std::sscanf(text.c_str(), "%4d-%2u-%2u%n", &y, &mo, &d, &consumed) != 3) return std::nullopt;
    if (static_cast<std::size_t>(consumed) != text.size()) {
        int hour = -1;
        int rest = 0;
        if (std::sscanf(text.c_str() + consumed, "%c%2d%n", &tail, &hour, &rest) != 2 || (tail != '-' && tail != 'T')) {
            return std::nullopt;
        }
        if (static_cast<std::size_t>(consumed + rest) != text.size() || hour < 0 || hour > 23) return std::nullopt;
        h = hour;
    }
    year_month_day ymd{year{y}, month{mo}, day{d}};
    if (!ymd.ok()) return std::nullopt;
    return ArchiveHour{sys_days{ymd}} + hours{h};
}

std::string archive_file_name(ArchiveHour hour) {
    using namespace std::chrono;
    auto day_point = floor<days>(hour);
    year_month_day ymd{day_point};
    auto h = (hour - day_point).count();
    char buf[64];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u-%lld.json.gz", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()), static_cast<long long>(h));
    return buf;
}

FetchReport fetch_archive(ArchiveHour from, ArchiveHour to, const std::filesystem::path& destination,
                          ArchiveTransport& transport, const std::string& base_url) {
    if (to < from) throw InputError("fetch: end of range precedes start");
    std::filesystem::create_directories(destination);

    FetchReport report;
    for (auto hour = from; hour <= to; hour += std::chrono::hours{1}) {
        const auto name = archive_file_name(hour);
        const auto url = base_url + name;
        const auto path = destination / name;
        try {
            std::error_code ec;
            if (std::filesystem::exists(path, ec)) {
                const auto local = std::filesystem::file_size(path);
                auto remote = transport.remote_size(url);
                if (!remote || *remote == local) {
                    ++report.skipped;
                    report.files.push_back(path);
                    continue;
                }
            }
            auto partial = path;
            partial += ".part";
            transport.download(url, partial);
            std::filesystem::rename(partial, path);
            ++report.downloaded;
            report.files.push_back(path);
        } catch (const std::exception& e) {
            report.errors.push_back({url, e.what()});
            auto partial = path;
            partial += ".part";
            std::error_code ignored;
            std::filesystem::remove(partial, ignored);
        }
    }
    return report;
}

// ============================================================================
// libcurl transport
// ============================================================================

namespace {

std::size_t write_to_file(char* data, std::size_t size, std::size_t count, void* user) {
    return std::fwrite(data, size, count, static_cast<std::FILE*>(user)) * size;
}

struct CurlHandle {
    CURL* handle = curl_easy_init();
    ~CurlHandle() {
        if (handle) curl_easy_cleanup(handle);
    }
};

}  // namespace

CurlTransport::CurlTransport() { curl_global_init(CURL_GLOBAL_DEFAULT); }
CurlTransport::~CurlTransport() { curl_global_cleanup(); }

std::optional<std::uint64_t> CurlTransport::remote_size(const std::string& url) {
    CurlHandle curl;
    if (!curl.handle) throw std::runtime_error("curl_easy_init failed");
    curl_easy_setopt(curl.handle, CURLOPT_URL, url.c_str());
    curl_easy_setopt(curl.handle, CURLOPT_NOBODY, 1L);
    curl_easy_setopt(curl.handle, CURLOPT_FOLLOWLOCATION, 1L);
    curl_easy_setopt(curl.handle, CURLOPT_FAILONERROR, 1L);
    if (auto rc = curl_easy_perform(curl.handle); rc != CURLE_OK) throw std::runtime_error(curl_easy_strerror(rc));
    curl_off_t length = -1;
    curl_easy_getinfo(curl.handle, CURLINFO_CONTENT_LENGTH_DOWNLOAD_T, &length);
    if (length < 0) return std::nullopt;
    return static_cast<std::uint64_t>(length);
}

void CurlTransport::download(const std::string& url, const std::filesystem::path& destination) {
    CurlHandle curl;
    if (!curl.handle) throw std::runtime_error("curl_easy_init failed");
    std::FILE* out = std::fopen(destination.c_str(), "wb");
    if (!out) throw std::runtime_error("cannot write " + destination.string());
    curl_easy_setopt(curl.handle, CURLOPT_URL, url.c_str());
    curl_easy_setopt(curl.handle, CURLOPT_FOLLOWLOCATION, 1L);
    curl_easy_setopt(curl.handle, CURLOPT_FAILONERROR, 1L);
    curl_easy_setopt(curl.handle, CURLOPT_WRITEFUNCTION, write_to_file);
    curl_easy_setopt(curl.handle, CURLOPT_WRITEDATA, out);
    auto rc = curl_easy_perform(curl.handle);
    std::fclose(out);
    if (rc != CURLE_OK) throw std::runtime_error(curl_easy_strerror(rc));
}

}  // namespace oss_mentor
