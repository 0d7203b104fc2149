// The only translation unit that includes cpp-httplib for clients.
#include <httplib.h>

#include "polalign/error.hpp"
#include "polalign/http_client.hpp"

namespace polalign::http {

namespace {

class HttplibTransport final : public HttpTransport {
public:
    HttpResponse post_json(const std::string& url, const std::string& body, const Headers& headers,
                           std::chrono::milliseconds timeout) override {
        const auto [origin, path] = split_url(url);
        httplib::Client client(origin);
        if (!client.is_valid()) throw TransportError("cannot create HTTP client for '" + origin + "'");
        const auto seconds = std::chrono::duration_cast<std::chrono::seconds>(timeout);
        const auto micros = std::chrono::duration_cast<std::chrono::microseconds>(timeout - seconds);
        client.set_connection_timeout(seconds.count(), micros.count());
        client.set_read_timeout(seconds.count(), micros.count());
        client.set_write_timeout(seconds.count(), micros.count());

        httplib::Headers hh;
        std::string content_type = "application/json";
        for (const auto& [k, v] : headers) {
            if (k == "Content-Type")
                content_type = v;
            else
                hh.emplace(k, v);
        }
        auto result = client.Post(path, hh, body, content_type);
        if (!result)
            throw TransportError("request to " + url + " failed: " + httplib::to_string(result.error()), 0);
        return {result->status, result->body};
    }
};

}  // namespace

std::shared_ptr<HttpTransport> make_default_transport() { return std::make_shared<HttplibTransport>(); }

}  // namespace polalign::http
