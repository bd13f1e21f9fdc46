// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace efpc {

// Root of every error thrown by the library. Callers that only care about
// "something went wrong in the pipeline" can catch this.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Caller violated a documented contract (bad argument, mismatched lengths).
class InvalidArgument : public Error {
public:
    using Error::Error;
};

class LengthMismatch : public InvalidArgument {
public:
    using InvalidArgument::InvalidArgument;
};

class ShapeMismatch : public InvalidArgument {
public:
    using InvalidArgument::InvalidArgument;
};

class EmptyDataset : public InvalidArgument {
public:
    using InvalidArgument::InvalidArgument;
};

class InsufficientData : public InvalidArgument {
public:
    using InvalidArgument::InvalidArgument;
};

class SequenceTooLong : public InvalidArgument {
public:
    using InvalidArgument::InvalidArgument;
};

class InstructionTooLong : public InvalidArgument {
public:
    using InvalidArgument::InvalidArgument;
};

// Provider returned nothing that counts as a compression.
class EmptyCompression : public Error {
public:
    using Error::Error;
};

// Network failure or timeout that survived the retry budget.
class TransportError : public Error {
public:
    using Error::Error;
};

// Too many chunks failed during a distillation run.
class DistillationFailed : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

class FormatVersionMismatch : public Error {
public:
    using Error::Error;
};

class ChecksumMismatch : public Error {
public:
    using Error::Error;
};

// Malformed input file (JSONL record, config document).
class ParseError : public Error {
public:
    using Error::Error;
};

class ValidationError : public Error {
public:
    using Error::Error;
};

}  // namespace efpc
