#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "graspsynth/error.hpp"
#include "graspsynth/grasp.hpp"
#include "graspsynth/pipeline.hpp"
#include "graspsynth/sgt.hpp"

namespace httplib {
class Server;
}

namespace graspsynth {

/// Validation failure attributable to one request field.
class FieldError : public ValidationError {
public:
    FieldError(std::string field, const std::string& what) : ValidationError(what), field_(std::move(field)) {}
    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

/// Rectangle evaluation against a scene that has no annotations.
class EmptyGroundTruthError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

/// Trial request in API units: pixels and degrees.
struct TrialRequest {
    double x = 0;
    double y = 0;
    double theta = 0;
    double opening = 0;
    double jaw_size = 0;
    std::string client;
};

struct Submission {
    std::string submission_id;
    std::string timestamp;  // UTC, ISO 8601
    std::string scene_id;
    TrialRequest request;
    bool success = false;
    std::optional<FailureReason> failure;

    nlohmann::json to_json() const;
    static Submission from_json(const nlohmann::json& j);
};

/// Newline-delimited JSON, append-only. Each record is written with one
/// write() and fsync'd before append() returns; a torn trailing line left by a
/// crash is cut off when the log is reopened. Appends are serialized.
class SubmissionLog {
public:
    explicit SubmissionLog(std::filesystem::path path);
    ~SubmissionLog();
    SubmissionLog(const SubmissionLog&) = delete;
    SubmissionLog& operator=(const SubmissionLog&) = delete;

    /// Assigns the id and writes the record. Throws IoError with the file unchanged on failure.
    Submission append(Submission s);
    std::size_t size() const;
    const std::vector<Submission>& loaded() const { return loaded_; }
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
    int fd_ = -1;
    mutable std::mutex mu_;
    std::size_t count_ = 0;
    std::vector<Submission> loaded_;
};

struct TrialResult {
    TrialOutcome outcome;
    Submission submission;
};

struct ServiceStats {
    std::size_t trials = 0;
    std::size_t successes = 0;
    std::array<std::size_t, kAllFailureReasons.size()> failures{};
    std::size_t rect_evals = 0;
    std::size_t rect_matches = 0;

    nlohmann::json to_json() const;
};

/// Scene-backed SGT oracle and rectangle scorer. The dataset is immutable
/// after construction; trials run concurrently, log appends are serialized.
class EvalService {
public:
    EvalService(Dataset dataset, const std::filesystem::path& log_path);

    std::vector<std::string> scene_ids() const;
    /// Throws NotFoundError for an unknown id.
    const DatasetScene& scene(const std::string& scene_id) const;
    nlohmann::json scene_info(const std::string& scene_id) const;

    /// Checks the request against the scene; returns the grasp and the jaw size in meters.
    std::pair<Grasp, double> validate_trial(const DatasetScene& scene, const TrialRequest& req) const;
    TrialResult handle_trial(const std::string& scene_id, const TrialRequest& req);
    /// `pred.jaw_size()` is in pixels. Throws EmptyGroundTruthError for a scene without annotations.
    RectMatch handle_rect_eval(const std::string& scene_id, const Grasp& pred, const RectCriterionConfig& cfg);

    ServiceStats stats() const;
    const Dataset& dataset() const { return dataset_; }
    const GripperConfig& gripper() const { return dataset_.manifest.config.gripper; }
    std::size_t log_size() const { return log_.size(); }

private:
    void record(const Submission& s);

    Dataset dataset_;
    SubmissionLog log_;
    mutable std::mutex stats_mu_;
    ServiceStats stats_;
};

/// JSON/HTTP front end, versioned under /api/v1.
class HttpServer {
public:
    explicit HttpServer(EvalService& service);
    ~HttpServer();
    HttpServer(const HttpServer&) = delete;
    HttpServer& operator=(const HttpServer&) = delete;

    /// Binds without serving. Port 0 picks a free port. Returns the bound port; throws IoError.
    int bind(const std::string& host, int port);
    /// Serves on the calling thread until stop().
    void run();
    /// Serves on a background thread.
    void start();
    void stop();

private:
    void install_routes();

    EvalService& service_;
    std::unique_ptr<httplib::Server> server_;
    std::thread thread_;
};

}  // namespace graspsynth
