// Copyright (c) 2026 decentsim authors
// Use of this source code is governed by an Apache-2.0
// license that can be found in the LICENSE file or at
// https://www.apache.org/licenses/LICENSE-2.0

#include "decent/fabric.hpp"

#include <algorithm>
#include <chrono>
#include <condition_variable>
#include <deque>
#include <map>
#include <mutex>
#include <queue>
#include <thread>
#include <vector>

namespace decent::fabric {

// ---------------------------------------------------------------------------
// VirtualFabric
//
// Discrete-event core. Tasks are OS threads cooperating under a strict
// handoff discipline: at any moment either the scheduler or exactly one task
// runs. Tasks block only through fabric primitives, which park the thread
// and return control to the scheduler; the scheduler wakes tasks only while
// processing events. Event order (time, then schedule sequence) is therefore
// the only source of ordering, which makes runs reproducible from the seed.
// ---------------------------------------------------------------------------

namespace {
thread_local void* tls_current_task = nullptr;
}

struct VirtualFabric::Impl {
  struct Task {
    std::uint64_t id = 0;
    std::string name;
    std::thread thread;
    std::condition_variable_any cv;
    bool run_flag = false;
    bool parked = false;
    bool finished = false;
    // Bumped on every park; lets the scheduler tell "parked again" apart
    // from "never left the previous park".
    std::uint64_t park_epoch = 0;
  };

  struct Event {
    Micros time;
    std::uint64_t seq;
    std::function<void()> fn;
    bool operator>(const Event& o) const {
      return time != o.time ? time > o.time : seq > o.seq;
    }
  };

  template <typename T>
  struct WaitQueue {
    std::deque<T> items;
    bool closed = false;
    std::deque<Task*> waiters;
    // Wait identity per task: a timeout event only fires for the wait it
    // was armed by, never for a later wait of the same task.
    std::map<Task*, std::uint64_t> wait_tokens;
    std::map<Task*, bool> timeout_flags;
  };

  struct ConnState {
    ConnId id = 0;
    Address dialer_addr;
    Address acceptor_addr;
    WaitQueue<Bytes> to_dialer;
    WaitQueue<Bytes> to_acceptor;
    bool tapped = false;
  };
  using ConnStatePtr = std::shared_ptr<ConnState>;

  struct ListenerState {
    Address addr;
    WaitQueue<ConnStatePtr> pending;
  };
  using ListenerStatePtr = std::shared_ptr<ListenerState>;

  VirtualFabric* fabric = nullptr;
  std::recursive_mutex mu;
  std::condition_variable_any sched_cv;
  std::shared_ptr<ManualClock> clock = std::make_shared<ManualClock>();
  std::priority_queue<Event, std::vector<Event>, std::greater<Event>> events;
  std::uint64_t next_seq = 0;
  std::uint64_t next_conn_id = 1;
  std::uint64_t next_wait_token = 0;
  std::vector<std::unique_ptr<Task>> tasks;
  std::map<std::string, ListenerStatePtr> listeners;
  std::map<ConnId, ConnStatePtr> conns;
  std::map<std::string, bool> tapped_nodes;
  bool tap_all = false;
  FrameTap tap;
  Rng rng{0};
  bool stopping = false;

  using Lock = std::unique_lock<std::recursive_mutex>;

  void schedule_locked(Micros t, std::function<void()> fn) {
    events.push(Event{std::max(t, clock->now()), next_seq++, std::move(fn)});
  }

  // Scheduler side: hand control to `t` and wait until it parks again or
  // finishes. Only called from event functions, never from task context.
  void run_task_locked(Lock& lk, Task* t) {
    if (t->finished) return;
    std::uint64_t before = t->park_epoch;
    t->run_flag = true;
    t->cv.notify_all();
    sched_cv.wait(lk, [t, before] {
      return t->finished || (t->parked && t->park_epoch > before);
    });
  }

  // Task side: park until the scheduler hands control back.
  void park_and_wait(Lock& lk, Task* self) {
    if (stopping) throw TaskKilled{};
    self->parked = true;
    ++self->park_epoch;
    sched_cv.notify_all();
    self->cv.wait(lk, [self] { return self->run_flag; });
    self->run_flag = false;
    self->parked = false;
    if (stopping) throw TaskKilled{};
  }

  Task* current_task() { return static_cast<Task*>(tls_current_task); }

  Task* require_task() {
    Task* t = current_task();
    if (t == nullptr) {
      throw std::logic_error(
          "blocking fabric call outside a spawned task");
    }
    return t;
  }

  template <typename T>
  void push_and_wake(Lock& lk, WaitQueue<T>& q, T item) {
    q.items.push_back(std::move(item));
    wake_waiter(lk, q);
  }

  template <typename T>
  void close_and_wake(Lock& lk, WaitQueue<T>& q) {
    q.closed = true;
    while (!q.waiters.empty()) {
      Task* t = q.waiters.front();
      q.waiters.pop_front();
      q.wait_tokens.erase(t);
      run_task_locked(lk, t);
    }
  }

  template <typename T>
  void wake_waiter(Lock& lk, WaitQueue<T>& q) {
    if (!q.waiters.empty()) {
      Task* t = q.waiters.front();
      q.waiters.pop_front();
      q.wait_tokens.erase(t);
      run_task_locked(lk, t);
    }
  }

  // Blocking pop, task context. Throws TransportError on timeout or close.
  template <typename T, typename Owner>
  T wait_pop(WaitQueue<T>& q, const std::shared_ptr<Owner>& keep_alive,
             Micros timeout, const char* what) {
    Lock lk(mu);
    Task* self = require_task();
    for (;;) {
      if (!q.items.empty()) {
        T item = std::move(q.items.front());
        q.items.pop_front();
        return item;
      }
      if (q.closed) {
        throw TransportError(DisconnectKind::Closed,
                             std::string(what) + " closed");
      }
      q.waiters.push_back(self);
      q.timeout_flags[self] = false;
      std::uint64_t token = ++next_wait_token;
      q.wait_tokens[self] = token;
      if (timeout != kNoTimeout) {
        auto* qp = &q;
        schedule_locked(clock->now() + timeout,
                        [this, qp, self, token, keep_alive] {
          Lock lk2(mu);
          auto tok = qp->wait_tokens.find(self);
          if (tok == qp->wait_tokens.end() || tok->second != token) return;
          auto it = std::find(qp->waiters.begin(), qp->waiters.end(), self);
          if (it != qp->waiters.end()) {
            qp->waiters.erase(it);
            qp->wait_tokens.erase(self);
            qp->timeout_flags[self] = true;
            run_task_locked(lk2, self);
          }
        });
      }
      park_and_wait(lk, self);
      bool timed_out = q.timeout_flags[self];
      q.timeout_flags.erase(self);
      if (timed_out && q.items.empty() && !q.closed) {
        throw TransportError(DisconnectKind::Timeout,
                             std::string(what) + " timed out");
      }
    }
  }

  void deliver(ConnStatePtr st, bool to_acceptor, Bytes frame, Micros at) {
    schedule_locked(at, [this, st, to_acceptor, frame = std::move(frame)]() mutable {
      Lock lk(mu);
      auto& q = to_acceptor ? st->to_acceptor : st->to_dialer;
      if (q.closed) return;
      fabric->counters().frames_delivered.fetch_add(1,
                                                    std::memory_order_relaxed);
      push_and_wake(lk, q, std::move(frame));
    });
  }

  void send_frame(const ConnStatePtr& st, bool to_acceptor, Bytes frame) {
    Lock lk(mu);
    Micros arrival = clock->now() + fabric->link_latency();
    if (st->tapped && tap) {
      // Tap runs inline so frame and close ordering on a link is preserved;
      // send calls are already serialized by the handoff discipline. Taps
      // must not block; injected traffic goes through the scheduler.
      TapEvent ev{st->id, to_acceptor,
                  to_acceptor ? st->dialer_addr : st->acceptor_addr,
                  to_acceptor ? st->acceptor_addr : st->dialer_addr,
                  std::move(frame)};
      TapAction action = tap(ev);
      if (action == TapAction::Deliver) {
        deliver(st, to_acceptor, std::move(ev.frame), arrival);
      }
    } else {
      deliver(st, to_acceptor, std::move(frame), arrival);
    }
  }

  void close_conn(const ConnStatePtr& st, bool from_dialer) {
    Lock lk(mu);
    // Local side stops receiving immediately; remote side after the wire
    // latency, behind frames already in flight.
    auto* local = from_dialer ? &st->to_dialer : &st->to_acceptor;
    schedule_locked(clock->now(), [this, st, local] {
      Lock lk2(mu);
      close_and_wake(lk2, *local);
    });
    auto* remote = from_dialer ? &st->to_acceptor : &st->to_dialer;
    schedule_locked(clock->now() + fabric->link_latency(), [this, st, remote] {
      Lock lk2(mu);
      close_and_wake(lk2, *remote);
    });
  }
};

namespace {

class VirtualConn final : public Conn {
 public:
  VirtualConn(VirtualFabric::Impl* impl, VirtualFabric::Impl::ConnStatePtr st,
              bool is_dialer)
      : impl_(impl), st_(std::move(st)), is_dialer_(is_dialer) {}

  void send(Bytes frame) override {
    impl_->send_frame(st_, /*to_acceptor=*/is_dialer_, std::move(frame));
  }

  Bytes recv(Micros timeout) override {
    auto& q = is_dialer_ ? st_->to_dialer : st_->to_acceptor;
    return impl_->wait_pop(q, st_, timeout, "conn");
  }

  void close() override { impl_->close_conn(st_, is_dialer_); }

  const Address& local_addr() const override {
    return is_dialer_ ? st_->dialer_addr : st_->acceptor_addr;
  }
  const Address& remote_addr() const override {
    return is_dialer_ ? st_->acceptor_addr : st_->dialer_addr;
  }

 private:
  VirtualFabric::Impl* impl_;
  VirtualFabric::Impl::ConnStatePtr st_;
  bool is_dialer_;
};

class VirtualListener final : public Listener {
 public:
  VirtualListener(VirtualFabric::Impl* impl,
                  VirtualFabric::Impl::ListenerStatePtr st)
      : impl_(impl), st_(std::move(st)) {}

  ConnPtr accept(Micros timeout) override {
    auto conn_state = impl_->wait_pop(st_->pending, st_, timeout, "listener");
    return std::make_shared<VirtualConn>(impl_, std::move(conn_state),
                                         /*is_dialer=*/false);
  }

  void close() override {
    VirtualFabric::Impl::Lock lk(impl_->mu);
    impl_->listeners.erase(st_->addr.str());
    impl_->schedule_locked(impl_->clock->now(), [impl = impl_, st = st_] {
      VirtualFabric::Impl::Lock lk2(impl->mu);
      impl->close_and_wake(lk2, st->pending);
    });
  }

  const Address& addr() const override { return st_->addr; }

 private:
  VirtualFabric::Impl* impl_;
  VirtualFabric::Impl::ListenerStatePtr st_;
};

}  // namespace

VirtualFabric::VirtualFabric(std::uint64_t seed) : impl_(new Impl) {
  impl_->fabric = this;
  impl_->rng = Rng(seed);
}

VirtualFabric::~VirtualFabric() {
  {
    Impl::Lock lk(impl_->mu);
    impl_->stopping = true;
    // Wake every parked task so it can unwind; tasks that have not reached
    // their first park yet will bail out on arrival. Loop until all are
    // finished, waiting for stragglers to report in.
    for (;;) {
      bool any_unfinished = false;
      bool progressed = false;
      for (auto& t : impl_->tasks) {
        if (t->finished) continue;
        any_unfinished = true;
        if (t->parked) {
          impl_->run_task_locked(lk, t.get());
          progressed = true;
        }
      }
      if (!any_unfinished) break;
      if (!progressed) {
        impl_->sched_cv.wait(lk);
      }
    }
  }
  for (auto& t : impl_->tasks) {
    if (t->thread.joinable()) t->thread.join();
  }
}

Micros VirtualFabric::now() const { return impl_->clock->now(); }

ClockPtr VirtualFabric::clock() const { return impl_->clock; }

void VirtualFabric::sleep_for(Micros d) { sleep_until(now() + d); }

void VirtualFabric::sleep_until(Micros t) {
  Impl::Lock lk(impl_->mu);
  Impl::Task* self = impl_->require_task();
  impl_->schedule_locked(t, [this, self] {
    Impl::Lock lk2(impl_->mu);
    impl_->run_task_locked(lk2, self);
  });
  impl_->park_and_wait(lk, self);
}

ListenerPtr VirtualFabric::listen(const Address& addr) {
  Impl::Lock lk(impl_->mu);
  auto& slot = impl_->listeners[addr.str()];
  if (slot) {
    throw std::logic_error("address already listening: " + addr.str());
  }
  slot = std::make_shared<Impl::ListenerState>();
  slot->addr = addr;
  return std::make_shared<VirtualListener>(impl_.get(), slot);
}

ConnPtr VirtualFabric::dial(const Address& from_node, const Address& addr,
                            Micros timeout) {
  (void)timeout;  // connection setup is modeled as one link traversal
  Impl::Lock lk(impl_->mu);
  auto it = impl_->listeners.find(addr.str());
  if (it == impl_->listeners.end()) {
    throw TransportError(DisconnectKind::Refused,
                         "no listener at " + addr.str());
  }
  auto st = std::make_shared<Impl::ConnState>();
  st->id = impl_->next_conn_id++;
  st->dialer_addr = from_node;
  st->acceptor_addr = addr;
  st->tapped = impl_->tap_all ||
               impl_->tapped_nodes.count(from_node.node) > 0 ||
               impl_->tapped_nodes.count(addr.node) > 0;
  impl_->conns[st->id] = st;

  auto listener = it->second;
  impl_->schedule_locked(now() + link_latency(), [impl = impl_.get(), listener,
                                                  st] {
    Impl::Lock lk2(impl->mu);
    if (listener->pending.closed) return;
    impl->push_and_wake(lk2, listener->pending, st);
  });
  return std::make_shared<VirtualConn>(impl_.get(), st, /*is_dialer=*/true);
}

void VirtualFabric::spawn(std::string name, std::function<void()> body) {
  Impl::Lock lk(impl_->mu);
  auto task = std::make_unique<Impl::Task>();
  Impl::Task* t = task.get();
  t->id = impl_->tasks.size() + 1;
  t->name = std::move(name);
  t->parked = false;
  impl_->tasks.push_back(std::move(task));

  t->thread = std::thread([impl = impl_.get(), t, body = std::move(body)] {
    tls_current_task = t;
    {
      Impl::Lock lk2(impl->mu);
      try {
        impl->park_and_wait(lk2, t);  // wait for first schedule
        lk2.unlock();
        body();
        lk2.lock();
      } catch (const TaskKilled&) {
        if (!lk2.owns_lock()) lk2.lock();
      } catch (const std::exception&) {
        // A task dying from an unhandled error must not wedge the scheduler.
        if (!lk2.owns_lock()) lk2.lock();
      }
      t->finished = true;
      impl->sched_cv.notify_all();
    }
  });

  // The new thread must reach its initial park before any event can try to
  // run it; otherwise the handoff discipline would race with thread startup.
  impl_->sched_cv.wait(lk, [t] { return t->parked || t->finished; });

  impl_->schedule_locked(impl_->clock->now(), [impl = impl_.get(), t] {
    Impl::Lock lk2(impl->mu);
    impl->run_task_locked(lk2, t);
  });
}

std::size_t VirtualFabric::run_until(Micros until) {
  // Events are popped under the lock but executed without it: event bodies
  // take the lock themselves, and handing control to a task must fully
  // release it.
  std::size_t n = 0;
  for (;;) {
    std::function<void()> fn;
    {
      Impl::Lock lk(impl_->mu);
      if (impl_->events.empty() || impl_->events.top().time > until) break;
      Impl::Event ev = impl_->events.top();
      impl_->events.pop();
      impl_->clock->advance_to(ev.time);
      fn = std::move(ev.fn);
    }
    fn();
    ++n;
  }
  Impl::Lock lk(impl_->mu);
  impl_->clock->advance_to(until);
  return n;
}

std::size_t VirtualFabric::run_to_quiescence() {
  std::size_t n = 0;
  for (;;) {
    std::function<void()> fn;
    {
      Impl::Lock lk(impl_->mu);
      if (impl_->events.empty()) break;
      Impl::Event ev = impl_->events.top();
      impl_->events.pop();
      impl_->clock->advance_to(ev.time);
      fn = std::move(ev.fn);
    }
    fn();
    ++n;
  }
  return n;
}

Rng VirtualFabric::fork_rng(std::string_view label) {
  Impl::Lock lk(impl_->mu);
  return impl_->rng.fork(label);
}

void VirtualFabric::mark_tapped(const std::string& node) {
  Impl::Lock lk(impl_->mu);
  impl_->tapped_nodes[node] = true;
}

void VirtualFabric::tap_all_links() {
  Impl::Lock lk(impl_->mu);
  impl_->tap_all = true;
}

void VirtualFabric::set_tap(FrameTap tap) {
  Impl::Lock lk(impl_->mu);
  impl_->tap = std::move(tap);
}

void VirtualFabric::inject(ConnId conn, bool to_acceptor, Bytes frame) {
  Impl::Lock lk(impl_->mu);
  auto it = impl_->conns.find(conn);
  if (it == impl_->conns.end()) return;
  impl_->deliver(it->second, to_acceptor, std::move(frame),
                 now() + link_latency());
}

void VirtualFabric::schedule_at(Micros t, std::function<void()> fn) {
  Impl::Lock lk(impl_->mu);
  impl_->schedule_locked(t, std::move(fn));
}

// ---------------------------------------------------------------------------
// RealtimeFabric
// ---------------------------------------------------------------------------

namespace {

Micros steady_now() {
  return static_cast<Micros>(
      std::chrono::duration_cast<std::chrono::microseconds>(
          std::chrono::steady_clock::now().time_since_epoch())
          .count());
}

class SteadyClock final : public Clock {
 public:
  Micros now() const override { return steady_now(); }
};

}  // namespace

struct RealtimeFabric::Impl {
  struct RtQueue {
    std::mutex m;
    std::condition_variable cv;
    std::deque<std::pair<Micros, Bytes>> frames;  // (arrival time, frame)
    bool closed = false;

    void push(Micros arrival, Bytes frame) {
      {
        std::lock_guard lk(m);
        if (closed) return;
        frames.emplace_back(arrival, std::move(frame));
      }
      cv.notify_one();
    }

    void close() {
      {
        std::lock_guard lk(m);
        closed = true;
      }
      cv.notify_all();
    }
  };

  struct ConnState {
    Address dialer_addr, acceptor_addr;
    RtQueue to_dialer, to_acceptor;

    void close_both() {
      to_dialer.close();
      to_acceptor.close();
    }
  };
  using ConnStatePtr = std::shared_ptr<ConnState>;

  struct ListenerState {
    Address addr;
    std::mutex m;
    std::condition_variable cv;
    std::deque<ConnStatePtr> pending;
    bool closed = false;
  };
  using ListenerStatePtr = std::shared_ptr<ListenerState>;

  std::shared_ptr<SteadyClock> clock = std::make_shared<SteadyClock>();
  std::mutex mu;
  std::map<std::string, ListenerStatePtr> listeners;
  std::vector<ConnStatePtr> conns;
  std::vector<std::thread> threads;
  std::atomic<bool> stopping{false};
};

namespace {

class RtConn final : public Conn {
 public:
  RtConn(RealtimeFabric::Impl* impl, RealtimeFabric* fabric,
         RealtimeFabric::Impl::ConnStatePtr st, bool is_dialer)
      : impl_(impl), fabric_(fabric), st_(std::move(st)), is_dialer_(is_dialer) {}

  void send(Bytes frame) override {
    Micros arrival =
        steady_now() + static_cast<Micros>(
                           static_cast<double>(fabric_->link_latency()) *
                           fabric_->time_scale());
    auto& q = is_dialer_ ? st_->to_acceptor : st_->to_dialer;
    fabric_->counters().frames_delivered.fetch_add(1,
                                                   std::memory_order_relaxed);
    q.push(arrival, std::move(frame));
  }

  Bytes recv(Micros timeout) override {
    auto& q = is_dialer_ ? st_->to_dialer : st_->to_acceptor;
    std::unique_lock lk(q.m);
    auto ready = [&] { return !q.frames.empty() || q.closed; };
    if (timeout == kNoTimeout) {
      q.cv.wait(lk, ready);
    } else {
      if (!q.cv.wait_for(lk, std::chrono::microseconds(timeout), ready)) {
        throw TransportError(DisconnectKind::Timeout, "conn timed out");
      }
    }
    if (impl_->stopping.load()) throw TaskKilled{};
    if (q.frames.empty()) {
      throw TransportError(DisconnectKind::Closed, "conn closed");
    }
    auto [arrival, frame] = std::move(q.frames.front());
    q.frames.pop_front();
    lk.unlock();
    Micros now = steady_now();
    if (arrival > now) {
      std::this_thread::sleep_for(std::chrono::microseconds(arrival - now));
    }
    return frame;
  }

  void close() override { st_->close_both(); }

  const Address& local_addr() const override {
    return is_dialer_ ? st_->dialer_addr : st_->acceptor_addr;
  }
  const Address& remote_addr() const override {
    return is_dialer_ ? st_->acceptor_addr : st_->dialer_addr;
  }

 private:
  RealtimeFabric::Impl* impl_;
  RealtimeFabric* fabric_;
  RealtimeFabric::Impl::ConnStatePtr st_;
  bool is_dialer_;
};

class RtListener final : public Listener {
 public:
  RtListener(RealtimeFabric::Impl* impl, RealtimeFabric* fabric,
             RealtimeFabric::Impl::ListenerStatePtr st)
      : impl_(impl), fabric_(fabric), st_(std::move(st)) {}

  ConnPtr accept(Micros timeout) override {
    std::unique_lock lk(st_->m);
    auto ready = [&] { return !st_->pending.empty() || st_->closed; };
    if (timeout == kNoTimeout) {
      st_->cv.wait(lk, ready);
    } else {
      if (!st_->cv.wait_for(lk, std::chrono::microseconds(timeout), ready)) {
        throw TransportError(DisconnectKind::Timeout, "accept timed out");
      }
    }
    if (impl_->stopping.load()) throw TaskKilled{};
    if (st_->pending.empty()) {
      throw TransportError(DisconnectKind::Closed, "listener closed");
    }
    auto conn_state = std::move(st_->pending.front());
    st_->pending.pop_front();
    return std::make_shared<RtConn>(impl_, fabric_, std::move(conn_state),
                                    /*is_dialer=*/false);
  }

  void close() override {
    {
      std::lock_guard lk(impl_->mu);
      impl_->listeners.erase(st_->addr.str());
    }
    {
      std::lock_guard lk(st_->m);
      st_->closed = true;
    }
    st_->cv.notify_all();
  }

  const Address& addr() const override { return st_->addr; }

 private:
  RealtimeFabric::Impl* impl_;
  RealtimeFabric* fabric_;
  RealtimeFabric::Impl::ListenerStatePtr st_;
};

}  // namespace

RealtimeFabric::RealtimeFabric(double time_scale)
    : time_scale_(time_scale), impl_(new Impl) {}

RealtimeFabric::~RealtimeFabric() { shutdown(); }

Micros RealtimeFabric::now() const { return steady_now(); }

ClockPtr RealtimeFabric::clock() const { return impl_->clock; }

void RealtimeFabric::sleep_for(Micros d) {
  if (impl_->stopping.load()) throw TaskKilled{};
  std::this_thread::sleep_for(std::chrono::microseconds(
      static_cast<Micros>(static_cast<double>(d) * time_scale_)));
}

void RealtimeFabric::sleep_until(Micros t) {
  Micros now = steady_now();
  if (t > now) sleep_for(static_cast<Micros>((t - now) / time_scale_));
}

ListenerPtr RealtimeFabric::listen(const Address& addr) {
  std::lock_guard lk(impl_->mu);
  auto& slot = impl_->listeners[addr.str()];
  if (slot) {
    throw std::logic_error("address already listening: " + addr.str());
  }
  slot = std::make_shared<Impl::ListenerState>();
  slot->addr = addr;
  return std::make_shared<RtListener>(impl_.get(), this, slot);
}

ConnPtr RealtimeFabric::dial(const Address& from_node, const Address& addr,
                             Micros timeout) {
  (void)timeout;
  Impl::ListenerStatePtr listener;
  {
    std::lock_guard lk(impl_->mu);
    auto it = impl_->listeners.find(addr.str());
    if (it == impl_->listeners.end()) {
      throw TransportError(DisconnectKind::Refused,
                           "no listener at " + addr.str());
    }
    listener = it->second;
  }
  auto st = std::make_shared<Impl::ConnState>();
  st->dialer_addr = from_node;
  st->acceptor_addr = addr;
  {
    std::lock_guard lk(impl_->mu);
    impl_->conns.push_back(st);
  }
  {
    std::lock_guard lk(listener->m);
    if (listener->closed) {
      throw TransportError(DisconnectKind::Refused,
                           "listener closed at " + addr.str());
    }
    listener->pending.push_back(st);
  }
  listener->cv.notify_one();
  return std::make_shared<RtConn>(impl_.get(), this, st, /*is_dialer=*/true);
}

void RealtimeFabric::spawn(std::string name, std::function<void()> body) {
  (void)name;
  std::lock_guard lk(impl_->mu);
  impl_->threads.emplace_back([body = std::move(body)] {
    try {
      body();
    } catch (const TaskKilled&) {
    } catch (const std::exception&) {
    }
  });
}

void RealtimeFabric::shutdown() {
  impl_->stopping.store(true);
  std::vector<std::thread> threads;
  {
    std::lock_guard lk(impl_->mu);
    for (auto& [_, l] : impl_->listeners) {
      std::lock_guard lk2(l->m);
      l->closed = true;
      l->cv.notify_all();
    }
    impl_->listeners.clear();
    for (auto& c : impl_->conns) c->close_both();
    impl_->conns.clear();
    threads.swap(impl_->threads);
  }
  for (auto& t : threads) {
    if (t.joinable()) t.join();
  }
}

}  // namespace decent::fabric
