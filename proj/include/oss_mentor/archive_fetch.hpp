#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace oss_mentor {

using ArchiveHour = std::chrono::sys_time<std::chrono::hours>;

/// Accepts `YYYY-MM-DD` or `YYYY-MM-DD-H`. A bare date resolves to hour 0,
/// or to hour 23 when `end_of_day` is set.
std::optional<ArchiveHour> parse_archive_hour(const std::string& text, bool end_of_day);

/// `2015-01-01-15.json.gz`: the hourly archive naming scheme (hour not padded).
std::string archive_file_name(ArchiveHour hour);

/// Network side of archive fetching, replaceable by a test double.
class ArchiveTransport {
public:
    virtual ~ArchiveTransport() = default;
    /// Remote file size, or nullopt if the server does not report one.
    /// Throws std::runtime_error on network failure.
    virtual std::optional<std::uint64_t> remote_size(const std::string& url) = 0;
    /// Writes the remote file to `destination`; throws std::runtime_error on failure.
    virtual void download(const std::string& url, const std::filesystem::path& destination) = 0;
};

/// libcurl-backed transport.
class CurlTransport : public ArchiveTransport {
public:
    CurlTransport();
    ~CurlTransport() override;
    CurlTransport(const CurlTransport&) = delete;
    CurlTransport& operator=(const CurlTransport&) = delete;

    std::optional<std::uint64_t> remote_size(const std::string& url) override;
    void download(const std::string& url, const std::filesystem::path& destination) override;
};

struct FetchError {
    std::string url;
    std::string message;
};

struct FetchReport {
    std::vector<std::filesystem::path> files;  // present after the run, in hour order
    std::vector<FetchError> errors;
    std::size_t downloaded = 0;
    std::size_t skipped = 0;
};

/// Downloads every hourly archive in [from, to] (inclusive) into `destination`.
/// Files already present with the remote size are skipped; a failed hour is
/// reported and the remaining hours are still fetched.
FetchReport fetch_archive(ArchiveHour from, ArchiveHour to, const std::filesystem::path& destination,
                          ArchiveTransport& transport,
                          const std::string& base_url = "https://data.gharchive.org/");

}  // namespace oss_mentor
