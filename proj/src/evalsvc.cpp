#include "graspsynth/evalsvc.hpp"

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cmath>
#include <cstring>
#include <ctime>

#include <fmt/core.h>
#include <httplib.h>

#include "graspsynth/io.hpp"

namespace graspsynth {

using nlohmann::json;

namespace {

std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::now();
    const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    return fmt::format("{:04}-{:02}-{:02}T{:02}:{:02}:{:02}.{:03}Z", tm.tm_year + 1900, tm.tm_mon + 1, tm.tm_mday,
                       tm.tm_hour, tm.tm_min, tm.tm_sec, ms);
}

std::string errno_text() { return std::strerror(errno); }

json failure_json(const std::optional<FailureReason>& f) {
    if (!f) return nullptr;
    return std::string(to_string(*f));
}

}  // namespace

json Submission::to_json() const {
    return json{
        {"submission_id", submission_id},
        {"timestamp", timestamp},
        {"scene_id", scene_id},
        {"x", request.x},
        {"y", request.y},
        {"theta", request.theta},
        {"opening", request.opening},
        {"jaw_size", request.jaw_size},
        {"client", request.client},
        {"success", success},
        {"failure_reason", failure_json(failure)},
    };
}

Submission Submission::from_json(const json& j) {
    Submission s;
    s.submission_id = j.at("submission_id").get<std::string>();
    s.timestamp = j.at("timestamp").get<std::string>();
    s.scene_id = j.at("scene_id").get<std::string>();
    s.request.x = j.at("x").get<double>();
    s.request.y = j.at("y").get<double>();
    s.request.theta = j.at("theta").get<double>();
    s.request.opening = j.at("opening").get<double>();
    s.request.jaw_size = j.at("jaw_size").get<double>();
    s.request.client = j.at("client").get<std::string>();
    s.success = j.at("success").get<bool>();
    const auto& f = j.at("failure_reason");
    if (!f.is_null()) {
        s.failure = failure_reason_from_string(f.get<std::string>());
        if (!s.failure) throw ValidationError("unknown failure_reason '" + f.get<std::string>() + "'");
    }
    return s;
}

// ---------------------------------------------------------------- log

SubmissionLog::SubmissionLog(std::filesystem::path path) : path_(std::move(path)) {
    if (path_.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path_.parent_path(), ec);
    }
    fd_ = ::open(path_.c_str(), O_RDWR | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
    if (fd_ < 0) throw IoError(fmt::format("{}: cannot open submission log: {}", path_.string(), errno_text()));

    std::string text;
    try {
        text = read_text_file(path_);
    } catch (...) {
        ::close(fd_);
        throw;
    }
    // a crash mid-write leaves a partial last line; it was never acknowledged
    if (!text.empty() && text.back() != '\n') {
        const auto keep = text.rfind('\n');
        const std::size_t len = keep == std::string::npos ? 0 : keep + 1;
        if (::ftruncate(fd_, static_cast<off_t>(len)) != 0) {
            const std::string msg = errno_text();
            ::close(fd_);
            throw IoError(fmt::format("{}: cannot drop torn record: {}", path_.string(), msg));
        }
        text.resize(len);
    }
    std::size_t line_no = 0;
    for (auto line : split(text, '\n')) {
        ++line_no;
        if (trim(line).empty()) continue;
        try {
            loaded_.push_back(Submission::from_json(json::parse(line)));
        } catch (const std::exception& e) {
            ::close(fd_);
            throw ParseError(path_.string(), line_no, e.what());
        }
    }
    count_ = loaded_.size();
}

SubmissionLog::~SubmissionLog() {
    if (fd_ >= 0) ::close(fd_);
}

Submission SubmissionLog::append(Submission s) {
    std::lock_guard lock(mu_);
    s.submission_id = fmt::format("sub-{:08}", count_ + 1);
    if (s.timestamp.empty()) s.timestamp = utc_timestamp();
    const std::string line = s.to_json().dump() + "\n";

    const off_t start = ::lseek(fd_, 0, SEEK_END);
    if (start < 0) throw IoError(fmt::format("{}: {}", path_.string(), errno_text()));
    std::size_t done = 0;
    while (done < line.size()) {
        const ssize_t n = ::write(fd_, line.data() + done, line.size() - done);
        if (n < 0 && errno == EINTR) continue;
        if (n <= 0) {
            const std::string msg = n < 0 ? errno_text() : "short write";
            [[maybe_unused]] int rc = ::ftruncate(fd_, start);
            throw IoError(fmt::format("{}: cannot append submission: {}", path_.string(), msg));
        }
        done += static_cast<std::size_t>(n);
    }
    if (::fsync(fd_) != 0) {
        const std::string msg = errno_text();
        [[maybe_unused]] int rc = ::ftruncate(fd_, start);
        throw IoError(fmt::format("{}: fsync failed: {}", path_.string(), msg));
    }
    ++count_;
    return s;
}

std::size_t SubmissionLog::size() const {
    std::lock_guard lock(mu_);
    return count_;
}

// ---------------------------------------------------------------- service

json ServiceStats::to_json() const {
    json fails = json::object();
    for (std::size_t i = 0; i < kAllFailureReasons.size(); ++i)
        fails[std::string(to_string(kAllFailureReasons[i]))] = failures[i];
    return json{
        {"trials", trials},
        {"successes", successes},
        {"success_rate", trials ? static_cast<double>(successes) / static_cast<double>(trials) : 0.0},
        {"failures", fails},
        {"rect_evals", rect_evals},
        {"rect_matches", rect_matches},
        {"rect_accuracy", rect_evals ? static_cast<double>(rect_matches) / static_cast<double>(rect_evals) : 0.0},
    };
}

EvalService::EvalService(Dataset dataset, const std::filesystem::path& log_path)
    : dataset_(std::move(dataset)), log_(log_path) {
    for (const auto& s : log_.loaded()) record(s);
}

void EvalService::record(const Submission& s) {
    std::lock_guard lock(stats_mu_);
    ++stats_.trials;
    if (s.success) ++stats_.successes;
    if (s.failure) {
        for (std::size_t i = 0; i < kAllFailureReasons.size(); ++i)
            if (kAllFailureReasons[i] == *s.failure) ++stats_.failures[i];
    }
}

std::vector<std::string> EvalService::scene_ids() const {
    std::vector<std::string> ids;
    ids.reserve(dataset_.scenes.size());
    for (const auto& s : dataset_.scenes) ids.push_back(s.record.scene_id);
    return ids;
}

const DatasetScene& EvalService::scene(const std::string& scene_id) const {
    const DatasetScene* s = dataset_.find(scene_id);
    if (!s) throw NotFoundError("unknown scene '" + scene_id + "'");
    return *s;
}

json EvalService::scene_info(const std::string& scene_id) const {
    const DatasetScene& ds = scene(scene_id);
    const Scene& sc = ds.scene;
    return json{
        {"scene_id", sc.scene_id},
        {"object_id", sc.object_id},
        {"rows", sc.camera.rows},
        {"cols", sc.camera.cols},
        {"resolution", sc.camera.resolution},
        {"camera_height", sc.camera.height},
        {"longest_side", sc.longest_side},
        {"mass", sc.mass},
        {"pose", {{"tx", sc.pose.tx}, {"ty", sc.pose.ty}, {"yaw", sc.pose.yaw}}},
        {"seed", std::to_string(sc.seed)},
        {"grasp_count", ds.annotations.entries.size()},
        {"annotation_count", ds.annotations.line_count()},
        {"warning", ds.annotations.warning},
    };
}

std::pair<Grasp, double> EvalService::validate_trial(const DatasetScene& ds, const TrialRequest& req) const {
    const auto finite = [](double v, const char* field) {
        if (!std::isfinite(v)) throw FieldError(field, std::string(field) + " must be a finite number");
    };
    finite(req.x, "x");
    finite(req.y, "y");
    finite(req.theta, "theta");
    finite(req.opening, "opening");
    finite(req.jaw_size, "jaw_size");
    const Camera& cam = ds.scene.camera;
    if (req.x < 0 || req.x >= cam.cols) throw FieldError("x", fmt::format("x must lie in [0, {})", cam.cols));
    if (req.y < 0 || req.y >= cam.rows) throw FieldError("y", fmt::format("y must lie in [0, {})", cam.rows));
    if (req.theta <= -90.0 || req.theta > 90.0) throw FieldError("theta", "theta must lie in (-90, 90]");
    if (req.opening <= 0) throw FieldError("opening", "opening must be positive");
    if (req.jaw_size <= 0) throw FieldError("jaw_size", "jaw_size must be positive");
    const auto jaw_m = gripper().match_jaw_size(req.jaw_size * cam.resolution);
    if (!jaw_m) {
        std::string allowed;
        for (double j : gripper().jaw_sizes)
            allowed += (allowed.empty() ? "" : ", ") + format_double(j / cam.resolution);
        throw FieldError("jaw_size", "jaw_size must be one of " + allowed + " px");
    }
    return {Grasp(req.x, req.y, req.opening, req.jaw_size, req.theta), *jaw_m};
}

TrialResult EvalService::handle_trial(const std::string& scene_id, const TrialRequest& req) {
    const DatasetScene& ds = scene(scene_id);
    const auto [grasp, jaw_m] = validate_trial(ds, req);
    TrialResult r;
    r.outcome = simulate_grasp(ds.scene, grasp, jaw_m, gripper());
    Submission s;
    s.scene_id = scene_id;
    s.request = req;
    s.success = r.outcome.success;
    s.failure = r.outcome.failure;
    r.submission = log_.append(std::move(s));
    record(r.submission);
    return r;
}

RectMatch EvalService::handle_rect_eval(const std::string& scene_id, const Grasp& pred,
                                        const RectCriterionConfig& cfg) {
    cfg.validate();
    const DatasetScene& ds = scene(scene_id);
    const GraspSet gt = ds.annotations.rectangles(ds.scene.camera.resolution);
    if (gt.empty()) throw EmptyGroundTruthError("scene '" + scene_id + "' has no ground-truth annotations");
    const RectMatch m = rect_match(pred, gt, cfg);
    std::lock_guard lock(stats_mu_);
    ++stats_.rect_evals;
    if (m.matched) ++stats_.rect_matches;
    return m;
}

ServiceStats EvalService::stats() const {
    std::lock_guard lock(stats_mu_);
    return stats_;
}

// ---------------------------------------------------------------- http

namespace {

void send_json(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& message, const std::string& field = {}) {
    json body{{"error", message}};
    if (!field.empty()) body["field"] = field;
    send_json(res, status, body);
}

json parse_body(const httplib::Request& req) {
    json j;
    try {
        j = json::parse(req.body);
    } catch (const json::parse_error& e) {
        throw FieldError("body", std::string("malformed JSON: ") + e.what());
    }
    if (!j.is_object()) throw FieldError("body", "request body must be a JSON object");
    return j;
}

double number_field(const json& j, const char* field) {
    const auto it = j.find(field);
    if (it == j.end()) throw FieldError(field, std::string("missing field '") + field + "'");
    if (!it->is_number()) throw FieldError(field, std::string("field '") + field + "' must be a number");
    return it->get<double>();
}

std::optional<double> optional_number(const json& j, const char* field) {
    const auto it = j.find(field);
    if (it == j.end() || it->is_null()) return std::nullopt;
    return number_field(j, field);
}

TrialRequest trial_request(const json& j) {
    TrialRequest r;
    r.x = number_field(j, "x");
    r.y = number_field(j, "y");
    r.theta = number_field(j, "theta");
    r.opening = number_field(j, "opening");
    r.jaw_size = number_field(j, "jaw_size");
    if (const auto it = j.find("client"); it != j.end() && !it->is_null()) {
        if (!it->is_string()) throw FieldError("client", "field 'client' must be a string");
        r.client = it->get<std::string>();
    }
    return r;
}

json trial_json(const TrialResult& r) {
    return json{
        {"success", r.outcome.success},
        {"failure_reason", failure_json(r.outcome.failure)},
        {"submission_id", r.submission.submission_id},
    };
}

// Maps library exceptions onto status codes.
template <class F>
httplib::Server::Handler guarded(F f) {
    return [f](const httplib::Request& req, httplib::Response& res) {
        try {
            f(req, res);
        } catch (const FieldError& e) {
            send_error(res, 400, e.what(), e.field());
        } catch (const EmptyGroundTruthError& e) {
            send_error(res, 422, e.what());
        } catch (const NotFoundError& e) {
            send_error(res, 404, e.what());
        } catch (const ValidationError& e) {
            send_error(res, 400, e.what());
        } catch (const IoError& e) {
            send_error(res, 500, std::string("storage failure: ") + e.what());
        } catch (const std::exception& e) {
            send_error(res, 500, e.what());
        }
    };
}

}  // namespace

HttpServer::HttpServer(EvalService& service) : service_(service), server_(std::make_unique<httplib::Server>()) {
    // httplib also sets SO_REUSEPORT, which lets a second server share a busy port
    server_->set_socket_options([](socket_t sock) {
        int yes = 1;
        ::setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
    });
    install_routes();
}

HttpServer::~HttpServer() { stop(); }

void HttpServer::install_routes() {
    auto& svc = service_;
    httplib::Server& s = *server_;
    const std::string id = R"(([A-Za-z0-9_.\-]+))";

    s.Get("/api/v1/scenes", guarded([&svc](const httplib::Request&, httplib::Response& res) {
              send_json(res, 200, json{{"scenes", svc.scene_ids()}});
          }));

    s.Get("/api/v1/scenes/" + id, guarded([&svc](const httplib::Request& req, httplib::Response& res) {
              send_json(res, 200, svc.scene_info(req.matches[1]));
          }));

    s.Post("/api/v1/scenes/" + id + "/trials", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
               const std::string scene_id = req.matches[1];
               svc.scene(scene_id);  // unknown scene wins over a bad body
               const TrialRequest tr = trial_request(parse_body(req));
               send_json(res, 200, trial_json(svc.handle_trial(scene_id, tr)));
           }));

    s.Post("/api/v1/scenes/" + id + "/rect-eval",
           guarded([&svc](const httplib::Request& req, httplib::Response& res) {
               const std::string scene_id = req.matches[1];
               const DatasetScene& ds = svc.scene(scene_id);
               const json body = parse_body(req);
               RectCriterionConfig cfg;
               if (auto v = optional_number(body, "angle_thresh")) cfg.angle_thresh = *v;
               if (auto v = optional_number(body, "iou_thresh")) cfg.iou_thresh = *v;
               try {
                   cfg.validate();
               } catch (const ValidationError& e) {
                   const bool angle = !(cfg.angle_thresh > 0 && cfg.angle_thresh <= 90);
                   throw FieldError(angle ? "angle_thresh" : "iou_thresh", e.what());
               }
               const double jaw = optional_number(body, "jaw_size")
                                      .value_or(svc.gripper().screening_jaw_size / ds.scene.camera.resolution);
               const double x = number_field(body, "x");
               const double y = number_field(body, "y");
               const double theta = number_field(body, "theta");
               const double opening = number_field(body, "opening");
               std::optional<Grasp> pred;
               try {
                   pred.emplace(x, y, opening, jaw, theta);
               } catch (const ValidationError& e) {
                   throw FieldError("body", e.what());
               }
               const RectMatch m = svc.handle_rect_eval(scene_id, *pred, cfg);
               send_json(res, 200,
                         json{{"matched", m.matched},
                              {"matched_index", m.index ? json(*m.index) : json(nullptr)},
                              {"angle_thresh", cfg.angle_thresh},
                              {"iou_thresh", cfg.iou_thresh}});
           }));

    s.Get("/api/v1/stats", guarded([&svc](const httplib::Request&, httplib::Response& res) {
              json body = svc.stats().to_json();
              body["log_records"] = svc.log_size();
              send_json(res, 200, body);
          }));

    // Validates every item before running any, so a bad batch logs nothing.
    s.Post("/api/v1/trials/batch", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
               const json body = parse_body(req);
               const auto it = body.find("requests");
               if (it == body.end() || !it->is_array()) throw FieldError("requests", "'requests' must be an array");
               std::vector<std::pair<std::string, TrialRequest>> items;
               for (std::size_t i = 0; i < it->size(); ++i) {
                   const json& item = (*it)[i];
                   const std::string prefix = fmt::format("requests[{}]", i);
                   if (!item.is_object()) throw FieldError(prefix, prefix + " must be an object");
                   const auto sid = item.find("scene_id");
                   if (sid == item.end() || !sid->is_string())
                       throw FieldError(prefix + ".scene_id", prefix + ".scene_id must be a string");
                   try {
                       const DatasetScene& ds = svc.scene(sid->get<std::string>());
                       TrialRequest tr = trial_request(item);
                       svc.validate_trial(ds, tr);
                       items.emplace_back(sid->get<std::string>(), std::move(tr));
                   } catch (const FieldError& e) {
                       throw FieldError(prefix + "." + e.field(), prefix + ": " + e.what());
                   } catch (const NotFoundError& e) {
                       throw NotFoundError(prefix + ": " + e.what());
                   }
               }
               json results = json::array();
               std::size_t successes = 0;
               for (const auto& [sid, tr] : items) {
                   const TrialResult r = svc.handle_trial(sid, tr);
                   if (r.outcome.success) ++successes;
                   results.push_back(trial_json(r));
               }
               const std::size_t n = items.size();
               send_json(res, 200,
                         json{{"results", results},
                              {"count", n},
                              {"successes", successes},
                              {"accuracy", n ? static_cast<double>(successes) / static_cast<double>(n) : 0.0}});
           }));
}

int HttpServer::bind(const std::string& host, int port) {
    int bound = -1;
    if (port == 0) {
        bound = server_->bind_to_any_port(host);
    } else if (server_->bind_to_port(host, port)) {
        bound = port;
    }
    if (bound <= 0) throw IoError(fmt::format("cannot bind {}:{}", host, port));
    return bound;
}

void HttpServer::run() {
    if (!server_->listen_after_bind() && !server_->is_valid()) throw IoError("HTTP server failed");
}

void HttpServer::start() {
    thread_ = std::thread([this] { server_->listen_after_bind(); });
    server_->wait_until_ready();
}

void HttpServer::stop() {
    if (server_) server_->stop();
    if (thread_.joinable()) thread_.join();
}

}  // namespace graspsynth
