// Copyright (c) 2026 decentsim authors
// Use of this source code is governed by an Apache-2.0
// license that can be found in the LICENSE file or at
// https://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include "decent/fabric.hpp"
#include "decent/tlv.hpp"

// Shared framing: every fabric frame is `u8 type | u32 length | body`.
// Secure-channel payloads carry application messages in the same shape
// (without the length, which the record layer already provides).
namespace decent::wire {

void send_frame(const fabric::ConnPtr& conn, std::uint8_t type, ByteView body);
std::pair<std::uint8_t, Bytes> recv_frame(const fabric::ConnPtr& conn,
                                          Micros timeout);

// Application message inside a secure channel: u8 kind | body.
Bytes encode_msg(std::uint8_t kind, ByteView body);
std::pair<std::uint8_t, ByteView> split_msg(ByteView payload);

// Frame types 1..9 belong to the secure-channel record layer.
inline constexpr std::uint8_t kLaHello = 20;        // component -> server
inline constexpr std::uint8_t kLaHelloReply = 21;   // server -> component
inline constexpr std::uint8_t kLaIssueReq = 22;     // encrypted
inline constexpr std::uint8_t kLaIssueResp = 23;    // encrypted
inline constexpr std::uint8_t kLaError = 24;

inline constexpr std::uint8_t kIasVerifyReq = 30;
inline constexpr std::uint8_t kIasVerifyResp = 31;
inline constexpr std::uint8_t kIasSigrlReq = 32;
inline constexpr std::uint8_t kIasSigrlResp = 33;
inline constexpr std::uint8_t kIasError = 34;

// Application message kinds (inside secure channels).
inline constexpr std::uint8_t kMsgCorlReq = 50;
inline constexpr std::uint8_t kMsgCorlResp = 51;
inline constexpr std::uint8_t kMsgRevokeSubmit = 52;
inline constexpr std::uint8_t kMsgEvidenceSubmit = 53;
inline constexpr std::uint8_t kMsgOk = 54;
inline constexpr std::uint8_t kMsgError = 55;
inline constexpr std::uint8_t kMsgApprovalSubmit = 60;
inline constexpr std::uint8_t kMsgVerifyReq = 61;
inline constexpr std::uint8_t kMsgVerifyResp = 62;
inline constexpr std::uint8_t kMsgDhtLookup = 70;
inline constexpr std::uint8_t kMsgDhtLookupResp = 71;
inline constexpr std::uint8_t kMsgDhtGet = 72;
inline constexpr std::uint8_t kMsgDhtGetResp = 73;
inline constexpr std::uint8_t kMsgDhtPut = 74;
inline constexpr std::uint8_t kMsgDhtPutResp = 75;
inline constexpr std::uint8_t kMsgDhtGetPred = 76;
inline constexpr std::uint8_t kMsgDhtGetPredResp = 77;
inline constexpr std::uint8_t kMsgDhtNotify = 78;
inline constexpr std::uint8_t kMsgAppData = 90;

}  // namespace decent::wire
