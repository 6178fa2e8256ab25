/** JSON contracts of the gateway, mirrored field for field. */

export type Role = "admin" | "doctor" | "patient";

export interface LoginResponse {
  token: string;
  subject_id: string;
  role: Role;
  expires_in: number;
}

export interface Receipt {
  tx_id: string;
  block_num: number;
  validity: string;
}

export interface MutationResponse<T> {
  result: T;
  receipt: Receipt;
}

export interface PersonalDetails {
  first_name: string;
  last_name: string;
  date_of_birth: string;
  phone: string;
  address: string;
  emergency_contact: string;
}

/** List entries carry provenance stamps set by the chaincode. */
export interface MedicalEntry {
  recorded_by: string;
  recorded_at: number;
  [field: string]: unknown;
}

export interface MedicalSection {
  blood_group: string;
  allergies: string[];
  diagnoses: MedicalEntry[];
  medications: MedicalEntry[];
  treatment_notes: MedicalEntry[];
}

/** A patient's own record; the gateway never includes credentials. */
export interface PatientRecord {
  patient_id: string;
  personal: PersonalDetails;
  medical: MedicalSection;
  permission_granted: string[];
  created_by?: string;
  created_at?: number;
}

/** Names-only row used by the admin roster and the doctor's patient list. */
export interface NameRow {
  patient_id: string;
  first_name: string;
  last_name: string;
}

export interface DoctorRecordView {
  patient_id: string;
  first_name: string;
  last_name: string;
  medical: MedicalSection;
}

export interface ChainInfo {
  height: number;
  latest_block_hash: string;
  total_transactions: number;
  valid_transactions: number;
  invalid_transactions: number;
  transactions_by_chaincode: Record<string, number>;
}

export interface BlockView {
  number: number;
  prev_hash: string;
  data_hash: string;
  block_hash: string;
  validity: string[];
  transactions: { tx_id: string; function: string; chaincode_id: string }[];
}

export interface TxLookup {
  block_num: number;
  tx_index: number;
  validity: string;
  transaction: { tx_id: string; function: string; chaincode_id: string };
}

export interface HistoryEvent {
  tx_id: string;
  block_num: number;
  function: string;
  timestamp: number;
  deleted: boolean;
  document: Record<string, unknown> | null;
}

export interface MedicalDelta {
  diagnoses?: Record<string, unknown>[];
  medications?: Record<string, unknown>[];
  treatment_notes?: Record<string, unknown>[];
  blood_group?: string;
  allergies?: string[];
}
