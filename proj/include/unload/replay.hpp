#pragma once

#include <stdexcept>
#include <vector>

#include "unload/image.hpp"
#include "unload/rng.hpp"

namespace unload {

struct Transition {
    Observation observation;
    int action = 0;  // flat pixel index
    double reward = 0.0;
    Observation next_observation;
    bool terminal = false;
};

// Fixed-capacity ring buffer, oldest-first eviction, uniform sampling with
// replacement.
class ReplayBuffer {
public:
    explicit ReplayBuffer(size_t capacity = 100000) : capacity_(capacity) {
        if (capacity_ == 0) throw std::invalid_argument("capacity must be positive");
    }

    void push(Transition transition) {
        if (!storage_.empty() &&
            (transition.observation.height != storage_.front().observation.height ||
             transition.observation.width != storage_.front().observation.width)) {
            throw std::invalid_argument("observation shape mismatch");
        }
        if (storage_.size() < capacity_) {
            storage_.push_back(std::move(transition));
        } else {
            storage_[cursor_] = std::move(transition);
        }
        cursor_ = (cursor_ + 1) % capacity_;
    }

    // batch_size independent uniform draws with replacement.
    std::vector<const Transition*> sample(size_t batch_size, Rng& rng) const {
        if (storage_.empty()) throw std::logic_error("sample from empty replay buffer");
        std::vector<const Transition*> batch;
        batch.reserve(batch_size);
        for (size_t i = 0; i < batch_size; ++i) {
            batch.push_back(&storage_[rng.uniform_int(storage_.size())]);
        }
        return batch;
    }

    size_t size() const { return storage_.size(); }
    size_t capacity() const { return capacity_; }

    // Records in insertion order, oldest first.
    std::vector<const Transition*> in_order() const {
        std::vector<const Transition*> out;
        out.reserve(storage_.size());
        const size_t start = storage_.size() < capacity_ ? 0 : cursor_;
        for (size_t i = 0; i < storage_.size(); ++i) {
            out.push_back(&storage_[(start + i) % storage_.size()]);
        }
        return out;
    }

private:
    size_t capacity_;
    size_t cursor_ = 0;
    std::vector<Transition> storage_;
};

}  // namespace unload
