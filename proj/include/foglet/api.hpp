#pragma once

#include <condition_variable>
#include <memory>
#include <mutex>
#include <string>
#include <thread>

#include "foglet/engine.hpp"

namespace httplib {
class Server;
}

namespace foglet {

// HTTP/1.1 JSON service over an engine:
//   POST /v1/requests                 -> 202 {id}; 400/422 on invalid documents
//   GET  /v1/requests                 -> every request with its state
//   GET  /v1/requests/{id}            -> {id, state, placement?, reasons?}
//   GET  /v1/requests/{id}/explain    -> filter verdicts and scores
//   GET  /v1/nodes, /v1/placements, /v1/report
//   GET  /v1/links/{id}/utilization
//   POST /v1/events {link_id, state}  -> link fault injection
//   POST /v1/clock/advance {seconds}  -> moves the virtual clock
// Submissions are queued; a single worker thread drains the queue in
// arrival order.
class ApiServer {
 public:
  explicit ApiServer(Engine& engine);
  ~ApiServer();
  ApiServer(const ApiServer&) = delete;
  ApiServer& operator=(const ApiServer&) = delete;

  // Binds host:port (port 0 picks a free one) and returns the bound port.
  int bind(const std::string& host, int port);
  // Serves until stop() is called.
  void listen();
  void stop();

  // Blocks until the queue is empty and the worker is idle.
  void wait_idle();

 private:
  void routes();
  void worker();

  Engine& engine_;
  std::unique_ptr<httplib::Server> http_;
  std::mutex mutex_;
  std::condition_variable wake_;
  std::condition_variable idle_;
  bool busy_ = false;
  bool stopping_ = false;
  std::thread worker_;
};

}  // namespace foglet
