import { Snapshot } from "../src/protocol.js";

export const IDLE_SNAPSHOT: Snapshot = {
  v: 1,
  seq: 3,
  time: "2017-03-01T07:59:00",
  state: "IDLE",
  lcd: ["TIME 07:59:00   ", "NEXT 08:00 MORN ", "PARACETAMOL x2  ", "                "],
  leds: [false, false, false],
  buzzer: false,
  recent_log: [],
  sms_sentbox: { PATIENT: 0, FAMILY: 0 },
};

export const RINGING_SNAPSHOT: Snapshot = {
  v: 1,
  seq: 8,
  time: "2017-03-01T08:00:00",
  state: "RING1",
  lcd: ["TAKE BOX 1      ", "PARACETAMOL x2  ", "RINGING         ", "                "],
  leds: [true, false, false],
  buzzer: true,
  recent_log: [
    { seq: 1, at: "2017-03-01T08:00:00", kind: "DOSE_DUE", slot: "MORNING", compartment: 1 },
    { seq: 2, at: "2017-03-01T08:00:00", kind: "RING_START", slot: "MORNING" },
  ],
  sms_sentbox: { PATIENT: 0, FAMILY: 0 },
};

export const TAKEN_SNAPSHOT: Snapshot = {
  v: 1,
  seq: 12,
  time: "2017-03-01T08:00:31",
  state: "IDLE",
  lcd: ["TIME 08:00:31   ", "NEXT 08:00 MORN ", "PARACETAMOL x2  ", "                "],
  leds: [false, false, false],
  buzzer: false,
  recent_log: [
    { seq: 1, at: "2017-03-01T08:00:00", kind: "DOSE_DUE", slot: "MORNING", compartment: 1 },
    { seq: 2, at: "2017-03-01T08:00:00", kind: "RING_START", slot: "MORNING" },
    { seq: 3, at: "2017-03-01T08:00:31", kind: "TAKEN", slot: "MORNING", compartment: 1 },
  ],
  sms_sentbox: { PATIENT: 0, FAMILY: 0 },
};

export const ESCALATED_SNAPSHOT: Snapshot = {
  v: 1,
  seq: 40,
  time: "2017-03-01T08:12:00",
  state: "WAIT_FAMILY",
  lcd: ["TAKE BOX 1      ", "PARACETAMOL x2  ", "SMS SENT        ", "                "],
  leds: [true, false, false],
  buzzer: false,
  recent_log: [
    { seq: 5, at: "2017-03-01T08:07:00", kind: "SMS_REQUESTED", slot: "MORNING", recipient: "PATIENT" },
    { seq: 6, at: "2017-03-01T08:07:00", kind: "SMS_SENT", recipient: "PATIENT", sms_ref: 1, attempts: 1 },
    { seq: 7, at: "2017-03-01T08:12:00", kind: "SMS_REQUESTED", slot: "MORNING", recipient: "FAMILY" },
    { seq: 8, at: "2017-03-01T08:12:00", kind: "SMS_SENT", recipient: "FAMILY", sms_ref: 2, attempts: 1 },
  ],
  sms_sentbox: { PATIENT: 1, FAMILY: 1 },
};
