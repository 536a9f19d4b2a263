// Copyright 2026 The TokSE Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#include "tokse/nn/autograd.h"

#include <algorithm>
#include <atomic>
#include <unordered_set>

#include "tokse/core/errors.h"

namespace tokse::nn {
namespace {

std::atomic<std::uint64_t> g_order{0};
thread_local bool t_grad_enabled = true;

}  // namespace

Var::Var(Matrix value, bool requires_grad) : node_(std::make_shared<Node>()) {
  node_->value = std::move(value);
  node_->requires_grad = requires_grad;
  node_->order = g_order.fetch_add(1, std::memory_order_relaxed);
}

void Var::backward() const {
  if (!node_ || node_->value.size() != 1) {
    fail(ErrorKind::kInvalidArgument, "backward() needs a 1 x 1 root");
  }
  if (!node_->requires_grad) return;

  std::vector<Node*> nodes;
  std::unordered_set<Node*> seen;
  std::vector<Node*> stack = {node_.get()};
  seen.insert(node_.get());
  while (!stack.empty()) {
    Node* n = stack.back();
    stack.pop_back();
    nodes.push_back(n);
    for (const auto& in : n->inputs) {
      if (in->requires_grad && seen.insert(in.get()).second) {
        stack.push_back(in.get());
      }
    }
  }
  std::sort(nodes.begin(), nodes.end(),
            [](const Node* a, const Node* b) { return a->order > b->order; });

  node_->add_grad(Matrix::Ones(1, 1));
  for (Node* n : nodes) {
    if (n->backward && n->grad.size() != 0) n->backward(*n);
  }
}

bool grad_enabled() { return t_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(t_grad_enabled) {
  t_grad_enabled = false;
}

NoGradGuard::~NoGradGuard() { t_grad_enabled = previous_; }

Var make_result(Matrix value, std::vector<Var> inputs,
                std::function<void(Node&)> backward) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  node->order = g_order.fetch_add(1, std::memory_order_relaxed);
  if (t_grad_enabled) {
    const bool needed = std::any_of(inputs.begin(), inputs.end(),
                                    [](const Var& v) { return v.requires_grad(); });
    if (needed) {
      node->requires_grad = true;
      node->inputs.reserve(inputs.size());
      for (const auto& v : inputs) {
        if (v.defined()) node->inputs.push_back(v.shared());
      }
      node->backward = std::move(backward);
    }
  }
  return Var(std::move(node));
}

}  // namespace tokse::nn
