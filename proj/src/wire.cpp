// Copyright (c) 2026 decentsim authors
// Use of this source code is governed by an Apache-2.0
// license that can be found in the LICENSE file or at
// https://www.apache.org/licenses/LICENSE-2.0

#include "decent/wire.hpp"

namespace decent::wire {

void send_frame(const fabric::ConnPtr& conn, std::uint8_t type, ByteView body) {
  Bytes frame;
  frame.push_back(type);
  store_u32be(frame, static_cast<std::uint32_t>(body.size()));
  append(frame, body);
  conn->send(std::move(frame));
}

std::pair<std::uint8_t, Bytes> recv_frame(const fabric::ConnPtr& conn,
                                          Micros timeout) {
  Bytes frame = conn->recv(timeout);
  if (frame.size() < 5) {
    throw tlv::MalformedEncoding("frame shorter than header");
  }
  std::uint8_t type = frame[0];
  std::uint32_t len = load_u32be(ByteView(frame).subspan(1, 4));
  if (len != frame.size() - 5) {
    throw tlv::MalformedEncoding("frame length mismatch");
  }
  return {type, Bytes(frame.begin() + 5, frame.end())};
}

Bytes encode_msg(std::uint8_t kind, ByteView body) {
  Bytes out;
  out.push_back(kind);
  append(out, body);
  return out;
}

std::pair<std::uint8_t, ByteView> split_msg(ByteView payload) {
  if (payload.empty()) {
    throw tlv::MalformedEncoding("empty application message");
  }
  return {payload[0], payload.subspan(1)};
}

}  // namespace decent::wire
